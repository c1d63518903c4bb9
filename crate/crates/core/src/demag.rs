//! Stray field of a piecewise-uniform magnetization.
//!
//! Each cell pair interacts through the cell-averaged demagnetization tensor
//! of two uniformly magnetized boxes (Newell, Williams & Dunlop). The
//! convolution `h = -N * m` is evaluated with zero-padded FFTs; a quadratic
//! double loop over cell pairs is provided as a reference.

use std::f64::consts::PI;
use std::sync::Arc;

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::Result;
use crate::grid::{Grid, VectorField};
use crate::vec3::Vec3;

/// Offsets farther than this many cell diagonals use the quadrature far field.
pub const FAR_FIELD_DIAGONALS: f64 = 30.0;

/// Symmetric tensor stored as `[xx, yy, zz, xy, xz, yz]`.
pub type Tensor = [f64; 6];

const XX: usize = 0;
const YY: usize = 1;
const ZZ: usize = 2;
const XY: usize = 3;
const XZ: usize = 4;
const YZ: usize = 5;

fn asinh_ratio(num: f64, den_sq: f64) -> f64 {
    (num / den_sq.sqrt()).asinh()
}

/// Newell's `f`, whose 27-point second difference gives `Nxx`.
fn newell_f(x: f64, y: f64, z: f64) -> f64 {
    let (x, y, z) = (x.abs(), y.abs(), z.abs());
    let (x2, y2, z2) = (x * x, y * y, z * z);
    let r2 = x2 + y2 + z2;
    if r2 <= 0.0 {
        return 0.0;
    }
    let r = r2.sqrt();
    let mut acc = (2.0 * x2 - y2 - z2) * r / 6.0;
    if x > 0.0 && y > 0.0 && z > 0.0 {
        acc -= x * y * z * (y * z / (x * r)).atan();
    }
    if y > 0.0 && x2 + z2 > 0.0 {
        acc += 0.5 * y * (z2 - x2) * asinh_ratio(y, x2 + z2);
    }
    if z > 0.0 && x2 + y2 > 0.0 {
        acc += 0.5 * z * (y2 - x2) * asinh_ratio(z, x2 + y2);
    }
    acc
}

/// Newell's `g`, whose 27-point second difference gives `Nxy`. Odd in `x`
/// and `y`, even in `z`.
fn newell_g(x: f64, y: f64, z: f64) -> f64 {
    let sign = x.signum() * y.signum();
    let (x, y, z) = (x.abs(), y.abs(), z.abs());
    if x == 0.0 || y == 0.0 {
        return 0.0;
    }
    let (x2, y2, z2) = (x * x, y * y, z * z);
    let r = (x2 + y2 + z2).sqrt();
    let mut acc = -x * y * r / 3.0;
    if z > 0.0 {
        acc += x * y * z * asinh_ratio(z, x2 + y2);
        acc -= z * z2 / 6.0 * (x * y / (z * r)).atan();
        acc -= 0.5 * z * y2 * (x * z / (y * r)).atan();
        acc -= 0.5 * z * x2 * (y * z / (x * r)).atan();
    }
    acc += y / 6.0 * (3.0 * z2 - y2) * asinh_ratio(x, y2 + z2);
    acc += x / 6.0 * (3.0 * z2 - x2) * asinh_ratio(y, x2 + z2);
    sign * acc
}

/// 27-point second difference `sum w(a) w(b) w(c) F(x + a dx, ...)` with
/// weights `(−1, 2, −1)`, scaled by `1 / (4 pi V)`.
fn second_difference(
    func: impl Fn(f64, f64, f64) -> f64,
    x: f64,
    y: f64,
    z: f64,
    dx: f64,
    dy: f64,
    dz: f64,
) -> f64 {
    const W: [f64; 3] = [-1.0, 2.0, -1.0];
    let mut acc = 0.0;
    for (a, wa) in W.iter().enumerate() {
        let xa = x + (a as f64 - 1.0) * dx;
        for (b, wb) in W.iter().enumerate() {
            let yb = y + (b as f64 - 1.0) * dy;
            for (c, wc) in W.iter().enumerate() {
                let zc = z + (c as f64 - 1.0) * dz;
                acc += wa * wb * wc * func(xa, yb, zc);
            }
        }
    }
    acc / (4.0 * PI * dx * dy * dz)
}

fn newell_tensor(r: Vec3, d: Vec3) -> Tensor {
    let [x, y, z] = r;
    let [dx, dy, dz] = d;
    let mut t = [0.0; 6];
    t[XX] = second_difference(newell_f, x, y, z, dx, dy, dz);
    t[YY] = second_difference(newell_f, y, x, z, dy, dx, dz);
    t[ZZ] = second_difference(newell_f, z, y, x, dz, dy, dx);
    t[XY] = second_difference(newell_g, x, y, z, dx, dy, dz);
    t[XZ] = second_difference(newell_g, x, z, y, dx, dz, dy);
    t[YZ] = second_difference(newell_g, y, z, x, dy, dz, dx);
    t
}

/// Point-dipole tensor `(I r^2 − 3 r r^T) / (4 pi r^5)`.
pub fn dipole_tensor(r: Vec3) -> Tensor {
    let [x, y, z] = r;
    let r2 = x * x + y * y + z * z;
    let r5 = r2 * r2 * r2.sqrt();
    let s = 1.0 / (4.0 * PI * r5);
    [
        s * (r2 - 3.0 * x * x),
        s * (r2 - 3.0 * y * y),
        s * (r2 - 3.0 * z * z),
        -3.0 * s * x * y,
        -3.0 * s * x * z,
        -3.0 * s * y * z,
    ]
}

/// Cell-averaged tensor from tent-weighted Gauss-Legendre quadrature of the
/// dipole kernel. Accurate when the cells are far apart.
fn far_field_tensor(r: Vec3, d: Vec3) -> Tensor {
    // 3-point rule on each half of the tent support.
    const XI: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
    const WI: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    let nodes = |h: f64| -> [(f64, f64); 6] {
        let mut out = [(0.0, 0.0); 6];
        for (q, (xi, wi)) in XI.iter().zip(WI).enumerate() {
            let u = 0.5 * h * (1.0 + xi);
            let w = 0.5 * h * wi * (h - u) / (h * h);
            out[q] = (u, w);
            out[q + 3] = (-u, w);
        }
        out
    };
    let (nx, ny, nz) = (nodes(d[0]), nodes(d[1]), nodes(d[2]));
    let mut t = [0.0; 6];
    for &(ux, wx) in &nx {
        for &(uy, wy) in &ny {
            for &(uz, wz) in &nz {
                let w = wx * wy * wz;
                let dt = dipole_tensor([r[0] + ux, r[1] + uy, r[2] + uz]);
                for c in 0..6 {
                    t[c] += w * dt[c];
                }
            }
        }
    }
    let v = d[0] * d[1] * d[2];
    t.map(|c| c * v)
}

/// Demagnetization tensor between two cells of size `d` whose centers are
/// `(i dx, j dy, k dz)` apart.
pub fn demag_tensor(i: i64, j: i64, k: i64, d: Vec3) -> Tensor {
    let r = [i as f64 * d[0], j as f64 * d[1], k as f64 * d[2]];
    let dist = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    let diag = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if dist > FAR_FIELD_DIAGONALS * diag {
        far_field_tensor(r, d)
    } else {
        newell_tensor(r, d)
    }
}

/// Tensors for every non-negative offset `0..nx × 0..ny × 0..nz`, x-fastest.
/// Negative offsets follow from parity: diagonal entries are even, `xy`
/// is odd in x and y, and so on.
fn offset_table(grid: &Grid) -> Vec<Tensor> {
    let d = [grid.dx, grid.dy, grid.dz];
    let mut table = Vec::with_capacity(grid.len());
    for k in 0..grid.nz {
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let mut t = demag_tensor(i as i64, j as i64, k as i64, d);
                // Odd components vanish exactly on their zero planes.
                if i == 0 {
                    t[XY] = 0.0;
                    t[XZ] = 0.0;
                }
                if j == 0 {
                    t[XY] = 0.0;
                    t[YZ] = 0.0;
                }
                if k == 0 {
                    t[XZ] = 0.0;
                    t[YZ] = 0.0;
                }
                table.push(t);
            }
        }
    }
    table
}

#[inline]
fn signed_lookup(table: &[Tensor], grid: &Grid, i: i64, j: i64, k: i64) -> Tensor {
    let (ai, aj, ak) = (i.unsigned_abs() as usize, j.unsigned_abs() as usize, k.unsigned_abs() as usize);
    let mut t = table[grid.index(ai, aj, ak)];
    let (si, sj, sk) = (i.signum() as f64, j.signum() as f64, k.signum() as f64);
    if si < 0.0 || sj < 0.0 {
        t[XY] *= if si * sj < 0.0 { -1.0 } else { 1.0 };
    }
    if si < 0.0 || sk < 0.0 {
        t[XZ] *= if si * sk < 0.0 { -1.0 } else { 1.0 };
    }
    if sj < 0.0 || sk < 0.0 {
        t[YZ] *= if sj * sk < 0.0 { -1.0 } else { 1.0 };
    }
    t
}

#[inline]
fn apply_tensor(t: &Tensor, m: Vec3) -> Vec3 {
    [
        t[XX] * m[0] + t[XY] * m[1] + t[XZ] * m[2],
        t[XY] * m[0] + t[YY] * m[1] + t[YZ] * m[2],
        t[XZ] * m[0] + t[YZ] * m[1] + t[ZZ] * m[2],
    ]
}

fn padded(n: usize) -> usize {
    if n == 1 {
        1
    } else {
        2 * n
    }
}

/// 3D real FFT on the padded box: real transform along x, complex along y
/// and z.
struct PaddedFft {
    px: usize,
    py: usize,
    pz: usize,
    hx: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fy: Arc<dyn Fft<f64>>,
    iy: Arc<dyn Fft<f64>>,
    fz: Arc<dyn Fft<f64>>,
    iz: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for PaddedFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PaddedFft({}x{}x{})", self.px, self.py, self.pz)
    }
}

impl PaddedFft {
    fn new(px: usize, py: usize, pz: usize) -> Self {
        let mut rp = RealFftPlanner::<f64>::new();
        let mut cp = FftPlanner::<f64>::new();
        PaddedFft {
            px,
            py,
            pz,
            hx: px / 2 + 1,
            r2c: rp.plan_fft_forward(px),
            c2r: rp.plan_fft_inverse(px),
            fy: cp.plan_fft_forward(py),
            iy: cp.plan_fft_inverse(py),
            fz: cp.plan_fft_forward(pz),
            iz: cp.plan_fft_inverse(pz),
        }
    }

    fn spectrum_len(&self) -> usize {
        self.hx * self.py * self.pz
    }

    fn transform_yz(&self, spec: &mut [Complex64], fy: &dyn Fft<f64>, fz: &dyn Fft<f64>) {
        let (hx, py, pz) = (self.hx, self.py, self.pz);
        if py > 1 {
            let mut line = vec![Complex64::new(0.0, 0.0); py];
            for k in 0..pz {
                for a in 0..hx {
                    let base = a + hx * py * k;
                    for j in 0..py {
                        line[j] = spec[base + hx * j];
                    }
                    fy.process(&mut line);
                    for j in 0..py {
                        spec[base + hx * j] = line[j];
                    }
                }
            }
        }
        if pz > 1 {
            let mut line = vec![Complex64::new(0.0, 0.0); pz];
            let stride = hx * py;
            for j in 0..py {
                for a in 0..hx {
                    let base = a + hx * j;
                    for k in 0..pz {
                        line[k] = spec[base + stride * k];
                    }
                    fz.process(&mut line);
                    for k in 0..pz {
                        spec[base + stride * k] = line[k];
                    }
                }
            }
        }
    }

    /// Forward transform of a real padded array (length `px*py*pz`).
    fn forward(&self, real: &mut [f64]) -> Vec<Complex64> {
        let (px, hx) = (self.px, self.hx);
        let mut spec = vec![Complex64::new(0.0, 0.0); self.spectrum_len()];
        for (line, out) in real.chunks_exact_mut(px).zip(spec.chunks_exact_mut(hx)) {
            self.r2c
                .process(line, out)
                .expect("r2c buffer sizes are fixed by the plan");
        }
        self.transform_yz(&mut spec, self.fy.as_ref(), self.fz.as_ref());
        spec
    }

    /// Unnormalized inverse transform into a real padded array.
    fn inverse(&self, spec: &mut [Complex64]) -> Vec<f64> {
        let (px, hx) = (self.px, self.hx);
        self.transform_yz(spec, self.iy.as_ref(), self.iz.as_ref());
        let mut real = vec![0.0; px * self.py * self.pz];
        for (line, out) in spec.chunks_exact_mut(hx).zip(real.chunks_exact_mut(px)) {
            // The result is real; drop round-off in the self-conjugate bins.
            line[0].im = 0.0;
            if px % 2 == 0 {
                line[hx - 1].im = 0.0;
            }
            self.c2r
                .process(line, out)
                .expect("c2r buffer sizes are fixed by the plan");
        }
        real
    }
}

/// Demagnetization kernel for one grid, stored as the spectra of the six
/// tensor components on the zero-padded box. The spectra of a real tensor
/// with these parities are real.
#[derive(Debug)]
pub struct DemagKernel {
    grid: Grid,
    fft: PaddedFft,
    spectra: [Vec<f64>; 6],
    self_tensor: Tensor,
}

/// Builds the kernel for `grid`. Only the spacing ratios matter; the tensor
/// is invariant under uniform rescaling of the cell.
pub fn build_demag_kernel(grid: &Grid) -> Result<DemagKernel> {
    let (px, py, pz) = (padded(grid.nx), padded(grid.ny), padded(grid.nz));
    px.checked_mul(py)
        .and_then(|v| v.checked_mul(pz))
        .ok_or_else(|| crate::error::Error::InvalidGrid("padded demag box overflows".into()))?;
    let table = offset_table(grid);
    let fft = PaddedFft::new(px, py, pz);

    let wrap = |idx: usize, n: usize, p: usize| -> Option<i64> {
        if idx < n {
            Some(idx as i64)
        } else if idx > p - n {
            Some(idx as i64 - p as i64)
        } else {
            None
        }
    };

    let mut spectra: [Vec<f64>; 6] = Default::default();
    for (c, spectrum) in spectra.iter_mut().enumerate() {
        let mut real = vec![0.0; px * py * pz];
        for k in 0..pz {
            let Some(ok) = wrap(k, grid.nz, pz) else { continue };
            for j in 0..py {
                let Some(oj) = wrap(j, grid.ny, py) else { continue };
                for i in 0..px {
                    let Some(oi) = wrap(i, grid.nx, px) else { continue };
                    real[i + px * (j + py * k)] = signed_lookup(&table, grid, oi, oj, ok)[c];
                }
            }
        }
        *spectrum = fft.forward(&mut real).iter().map(|z| z.re).collect();
    }

    Ok(DemagKernel {
        grid: *grid,
        fft,
        spectra,
        self_tensor: table[0],
    })
}

impl DemagKernel {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Tensor at zero offset.
    pub fn self_tensor(&self) -> Tensor {
        self.self_tensor
    }

    /// `h = -N * m` in units of `Ms`.
    pub fn stray_field(&self, m: &VectorField) -> Result<VectorField> {
        m.ensure_on(&self.grid)?;
        let g = &self.grid;
        let (px, py) = (self.fft.px, self.fft.py);

        let mut mk: [Vec<Complex64>; 3] = Default::default();
        for (comp, spec) in mk.iter_mut().enumerate() {
            let mut real = vec![0.0; px * py * self.fft.pz];
            for (idx, v) in m.values().iter().enumerate() {
                let (i, j, k) = g.coords(idx);
                real[i + px * (j + py * k)] = v[comp];
            }
            *spec = self.fft.forward(&mut real);
        }

        let s = &self.spectra;
        let norm = -1.0 / (px * py * self.fft.pz) as f64;
        let mut hk: [Vec<Complex64>; 3] = Default::default();
        for (row, h) in hk.iter_mut().enumerate() {
            let idx = match row {
                0 => [XX, XY, XZ],
                1 => [XY, YY, YZ],
                _ => [XZ, YZ, ZZ],
            };
            *h = (0..self.fft.spectrum_len())
                .map(|f| {
                    (mk[0][f] * s[idx[0]][f] + mk[1][f] * s[idx[1]][f] + mk[2][f] * s[idx[2]][f])
                        * norm
                })
                .collect();
        }

        let mut out = VectorField::zeros(*g);
        for (comp, spec) in hk.iter_mut().enumerate() {
            let real = self.fft.inverse(spec);
            for (idx, v) in out.values_mut().iter_mut().enumerate() {
                let (i, j, k) = g.coords(idx);
                v[comp] = real[i + px * (j + py * k)];
            }
        }
        Ok(out)
    }
}

/// Convenience wrapper matching [`DemagKernel::stray_field`].
pub fn stray_field(kernel: &DemagKernel, m: &VectorField) -> Result<VectorField> {
    kernel.stray_field(m)
}

/// Reference stray field by explicit summation over all cell pairs.
pub fn stray_field_direct(grid: &Grid, m: &VectorField) -> Result<VectorField> {
    m.ensure_on(grid)?;
    let table = offset_table(grid);
    let mut out = VectorField::zeros(*grid);
    let src = m.values();
    for (t, h) in out.values_mut().iter_mut().enumerate() {
        let (ti, tj, tk) = grid.coords(t);
        let mut acc = [0.0; 3];
        for (s, ms) in src.iter().enumerate() {
            let (si, sj, sk) = grid.coords(s);
            let tensor = signed_lookup(
                &table,
                grid,
                ti as i64 - si as i64,
                tj as i64 - sj as i64,
                tk as i64 - sk as i64,
            );
            let nm = apply_tensor(&tensor, *ms);
            for c in 0..3 {
                acc[c] -= nm[c];
            }
        }
        *h = acc;
    }
    Ok(out)
}
