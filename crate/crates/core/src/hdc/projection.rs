//! Seeded semi-orthogonal projection matrices.
//!
//! A tall `m x c` matrix `P` with `PᵀP = I` embeds `R^c` into `R^m` while
//! preserving every inner product, so cosine similarities between pooled
//! layer features survive the trip into the shared hyperspace.
//!
//! Generation: fill an `m x c` matrix with standard Gaussians (row-major
//! draw order from a ChaCha8 stream), take a Householder QR decomposition,
//! keep the thin `Q` and flip each column by the sign of `R`'s matching
//! diagonal entry. The sign fix makes the result independent of the QR
//! routine's reflector convention.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::seed::{derive_seed, rng_from_seed};
use super::vector::HdVector;
use crate::error::{Error, Result};

/// Columns per rayon task when applying reflectors. Below this the work is
/// done serially.
const PAR_MIN_WORK: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionMatrix {
    layer_id: u32,
    seed: u64,
    rows: usize,
    cols: usize,
    /// Row-major `rows x cols`.
    entries: Vec<f32>,
}

impl ProjectionMatrix {
    /// Generates the matrix for `layer_id` from `seed`.
    pub fn generate(layer_id: u32, seed: u64, m: usize, c: usize) -> Result<Self> {
        let q = semi_orthogonal_f64(seed, m, c)?;
        Ok(Self {
            layer_id,
            seed,
            rows: m,
            cols: c,
            entries: q.into_iter().map(|v| v as f32).collect(),
        })
    }

    pub fn layer_id(&self) -> u32 {
        self.layer_id
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The hyperspace dimension m.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// The input (channel) dimension c.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[f32] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.entries[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f32] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    /// `h = P v`. Each output entry is a length-c dot product accumulated in `f64`.
    pub fn project(&self, v: &[f32]) -> Result<HdVector> {
        if v.len() != self.cols {
            return Err(Error::dim(format!(
                "layer {}: projection expects {} channels, got {}",
                self.layer_id,
                self.cols,
                v.len()
            )));
        }
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::Degenerate(format!(
                "layer {}: input entry {i} is not finite",
                self.layer_id
            )));
        }
        let out = self
            .entries
            .chunks_exact(self.cols)
            .map(|row| super::vector::dot_f64(row, v) as f32)
            .collect();
        Ok(HdVector::from_raw(out))
    }
}

/// Free-function form of [`ProjectionMatrix::generate`] with layer id 0.
pub fn generate_semi_orthogonal(seed: u64, m: usize, c: usize) -> Result<ProjectionMatrix> {
    ProjectionMatrix::generate(0, seed, m, c)
}

/// `P v` for a matrix and a raw channel vector.
pub fn project(p: &ProjectionMatrix, v: &[f32]) -> Result<HdVector> {
    p.project(v)
}

/// The full-precision semi-orthogonal matrix, row-major `m x c`.
///
/// [`ProjectionMatrix`] stores these values rounded to `f32`.
pub fn semi_orthogonal_f64(seed: u64, m: usize, c: usize) -> Result<Vec<f64>> {
    if c == 0 || m == 0 {
        return Err(Error::dim("projection dimensions must be positive"));
    }
    if m < c {
        return Err(Error::dim(format!(
            "cannot orthogonally embed {c} dims into fewer than {c} dims (m = {m})"
        )));
    }

    let mut rng = rng_from_seed(seed);
    // Column-major working copy; draws happen in row-major order.
    let mut a = vec![0.0f64; m * c];
    for i in 0..m {
        for j in 0..c {
            a[j * m + i] = StandardNormal.sample(&mut rng);
        }
    }

    let reflectors = householder_in_place(&mut a, m, c);
    let q = thin_q(&reflectors, m, c);

    let mut out = vec![0.0f64; m * c];
    for j in 0..c {
        let sign = if reflectors[j].diag < 0.0 { -1.0 } else { 1.0 };
        let col = &q[j * m..(j + 1) * m];
        for i in 0..m {
            out[i * c + j] = sign * col[i];
        }
    }
    Ok(out)
}

struct Reflector {
    /// Householder vector for rows `k..m`, scaled so that `H = I - v vᵀ`.
    v: Vec<f64>,
    /// The resulting diagonal entry `R[k][k]`.
    diag: f64,
}

/// Columns per panel in the blocked QR and Q formation. A panel stays in
/// cache while each reflector streams past it once.
const PANEL: usize = 32;

/// Householder QR of a column-major `m x c` matrix. Returns one reflector per
/// column; `a` is left holding `R` in its upper triangle (unused).
///
/// Left-looking and blocked by panels; every column still receives the
/// reflectors `0, 1, ...` in order, exactly as in the unblocked algorithm.
fn householder_in_place(a: &mut [f64], m: usize, c: usize) -> Vec<Reflector> {
    let mut reflectors: Vec<Reflector> = Vec::with_capacity(c);
    for ps in (0..c).step_by(PANEL) {
        let pe = (ps + PANEL).min(c);
        let panel = &mut a[ps * m..pe * m];
        let previous = &reflectors;
        let catch_up = |group: &mut [f64]| {
            for (k, r) in previous.iter().enumerate() {
                reflect_columns(&r.v, group, m, k);
            }
        };
        if (pe - ps) * ps * m >= PAR_MIN_WORK {
            panel.par_chunks_mut(m * 8).for_each(catch_up);
        } else {
            catch_up(panel);
        }

        for k in ps..pe {
            let (head, tail) = panel.split_at_mut((k - ps + 1) * m);
            let x = &head[(k - ps) * m + k..];
            let reflector = make_reflector(x);
            for col in tail.chunks_mut(m) {
                reflect(&reflector.v, &mut col[k..]);
            }
            reflectors.push(reflector);
        }
    }
    reflectors
}

fn make_reflector(x: &[f64]) -> Reflector {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Reflector {
            v: vec![0.0; x.len()],
            diag: 0.0,
        };
    }
    let alpha = if x[0] >= 0.0 { -norm } else { norm };
    let mut v = x.to_vec();
    v[0] -= alpha;
    let vnorm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
    if vnorm == 0.0 {
        return Reflector {
            v: vec![0.0; x.len()],
            diag: alpha,
        };
    }
    // Scale so H = I - v vᵀ, i.e. ||v||² = 2.
    let scale = std::f64::consts::SQRT_2 / vnorm;
    v.iter_mut().for_each(|t| *t *= scale);
    Reflector { v, diag: alpha }
}

/// `Q[:, :c] = H_0 H_1 ... H_{c-1} [I_c; 0]`, column-major, built a panel at
/// a time.
fn thin_q(reflectors: &[Reflector], m: usize, c: usize) -> Vec<f64> {
    let mut q = vec![0.0f64; m * c];
    let build = |(p, panel): (usize, &mut [f64])| {
        let ps = p * PANEL;
        let cols = panel.len() / m;
        for (j, col) in panel.chunks_mut(m).enumerate() {
            col[ps + j] = 1.0;
        }
        // Reflectors with index > j leave e_j untouched.
        for k in (0..ps + cols).rev() {
            let first = k.saturating_sub(ps);
            reflect_columns(&reflectors[k].v, &mut panel[first * m..], m, k);
        }
    };
    if m * c * c / 2 >= PAR_MIN_WORK {
        q.par_chunks_mut(m * PANEL).enumerate().for_each(build);
    } else {
        q.chunks_mut(m * PANEL).enumerate().for_each(build);
    }
    q
}

/// Applies `H = I - v vᵀ` to rows `k..` of every length-`m` column in
/// `cols`, two columns per pass over `v`.
fn reflect_columns(v: &[f64], cols: &mut [f64], m: usize, k: usize) {
    let mut pairs = cols.chunks_exact_mut(2 * m);
    for pair in &mut pairs {
        let (x, y) = pair.split_at_mut(m);
        let (x, y) = (&mut x[k..], &mut y[k..]);
        let mut acc = [0.0f64; 4];
        for ((vc, xc), yc) in v
            .chunks_exact(2)
            .zip(x.chunks_exact(2))
            .zip(y.chunks_exact(2))
        {
            acc[0] += vc[0] * xc[0];
            acc[1] += vc[1] * xc[1];
            acc[2] += vc[0] * yc[0];
            acc[3] += vc[1] * yc[1];
        }
        let (mut dx, mut dy) = (acc[0] + acc[1], acc[2] + acc[3]);
        if v.len() % 2 == 1 {
            let last = v.len() - 1;
            dx += v[last] * x[last];
            dy += v[last] * y[last];
        }
        for ((vi, xi), yi) in v.iter().zip(x.iter_mut()).zip(y.iter_mut()) {
            *xi -= dx * vi;
            *yi -= dy * vi;
        }
    }
    let rest = pairs.into_remainder();
    if !rest.is_empty() {
        reflect(v, &mut rest[k..]);
    }
}

#[inline]
fn reflect(v: &[f64], x: &mut [f64]) {
    let d = dot4(v, x);
    if d != 0.0 {
        for (xi, vi) in x.iter_mut().zip(v) {
            *xi -= d * vi;
        }
    }
}

/// Dot product with four independent accumulators, which lets the compiler
/// vectorise it.
#[inline]
fn dot4(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let (ac, bc) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ac
        .remainder()
        .iter()
        .zip(bc.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ac.zip(bc) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// One projection matrix per layer, all sharing the hyperspace dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionSet {
    hd_dim: usize,
    master_seed: u64,
    matrices: Vec<ProjectionMatrix>,
}

impl ProjectionSet {
    /// Generates `P_l` for every `(layer_id, channels)` pair. The seed of
    /// layer `l` is `derive_seed(master_seed, layer_id)`, so a layer keeps
    /// its matrix when other layers are added or dropped.
    pub fn generate(master_seed: u64, hd_dim: usize, layers: &[(u32, usize)]) -> Result<Self> {
        let matrices = layers
            .par_iter()
            .map(|&(layer_id, channels)| {
                ProjectionMatrix::generate(
                    layer_id,
                    layer_seed(master_seed, layer_id),
                    hd_dim,
                    channels,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            hd_dim,
            master_seed,
            matrices,
        })
    }

    /// Assembles a set from existing matrices, which must share their row count.
    pub fn from_matrices(master_seed: u64, matrices: Vec<ProjectionMatrix>) -> Result<Self> {
        let hd_dim = matrices
            .first()
            .ok_or_else(|| Error::usage("projection set needs at least one matrix"))?
            .rows();
        if let Some(p) = matrices.iter().find(|p| p.rows() != hd_dim) {
            return Err(Error::dim(format!(
                "layer {}: {} rows, expected {hd_dim}",
                p.layer_id(),
                p.rows()
            )));
        }
        Ok(Self {
            hd_dim,
            master_seed,
            matrices,
        })
    }

    pub fn hd_dim(&self) -> usize {
        self.hd_dim
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn matrices(&self) -> &[ProjectionMatrix] {
        &self.matrices
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }
}

/// Seed of the projection matrix for `layer_id`.
pub fn layer_seed(master_seed: u64, layer_id: u32) -> u64 {
    derive_seed(master_seed, layer_id as u64)
}
