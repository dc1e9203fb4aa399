//! Coordinate transform, observation windows and the discretization grid.
//!
//! Points live in `R^D = R^{D1} x R^{D2}`. The transform stretches the first
//! `D1` coordinates by `w^{1/D1}` and compresses the last `D2` by `T^{-1/D2}`;
//! the fixed image window is `J = [-1,1]^D` and its pre-image is the long
//! thin cuboid `J_T`. The grid subdivides `J_T` into cells of width
//! `1/(w h)^{1/D1}` in the stretched directions and length 1 in the
//! compressed ones; boundary cells are clipped against `J_T` and may have
//! zero volume.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("dimensions must be at least 1")]
    EmptyDimensions,
    #[error("non-finite coordinate in point")]
    NonFiniteCoordinate,
    #[error("point has dimension {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(&'static str),
    #[error("T = {0} is not an integer power n^D2 required by the counting reference measure")]
    InadmissibleT(f64),
    #[error("point lies outside the window")]
    OutsideWindow,
}

/// Reference measure on the compressed directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mu2Kind {
    /// Lebesgue measure on `R^{D2}`.
    Lebesgue,
    /// Counting measure on the shifted lattice `Z^{D2} + 1/2`.
    Counting,
}

/// Dimension split and reference-measure choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceConfig {
    d1_dims: usize,
    d2_dims: usize,
    mu2_kind: Mu2Kind,
}

impl SpaceConfig {
    pub fn new(d1_dims: usize, d2_dims: usize, mu2_kind: Mu2Kind) -> Result<Self, GeometryError> {
        if d1_dims == 0 || d2_dims == 0 {
            return Err(GeometryError::EmptyDimensions);
        }
        Ok(Self { d1_dims, d2_dims, mu2_kind })
    }

    pub fn lebesgue(d1_dims: usize, d2_dims: usize) -> Result<Self, GeometryError> {
        Self::new(d1_dims, d2_dims, Mu2Kind::Lebesgue)
    }

    pub fn d1_dims(&self) -> usize {
        self.d1_dims
    }

    pub fn d2_dims(&self) -> usize {
        self.d2_dims
    }

    pub fn total_dims(&self) -> usize {
        self.d1_dims + self.d2_dims
    }

    pub fn mu2_kind(&self) -> Mu2Kind {
        self.mu2_kind
    }

    /// Under the counting measure only `T = n^{D2}` is admitted.
    pub fn admits_t(&self, t: f64) -> bool {
        match self.mu2_kind {
            Mu2Kind::Lebesgue => t >= 1.0,
            Mu2Kind::Counting => {
                if t < 1.0 {
                    return false;
                }
                let n = t.powf(1.0 / self.d2_dims as f64).round();
                (n.powi(self.d2_dims as i32) - t).abs() < 1e-9 * t.max(1.0)
            }
        }
    }
}

/// Stretch profile `w(T) = k T^delta` with `k > 0` and `0 < delta <= 1`,
/// so that `w(T) -> infinity` and `w(T) = O(T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StretchSchedule {
    scale: f64,
    exponent: f64,
}

impl StretchSchedule {
    pub fn new(scale: f64, exponent: f64) -> Result<Self, GeometryError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(GeometryError::ParameterOutOfRange("scale must be positive"));
        }
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(GeometryError::ParameterOutOfRange("exponent must be in (0, 1]"));
        }
        Ok(Self { scale, exponent })
    }

    /// `w(T) = T`.
    pub fn identity() -> Self {
        Self { scale: 1.0, exponent: 1.0 }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.scale * t.powf(self.exponent)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// `w(T) <= c T` on the given grid, with the family's implied `c`.
    pub fn check_linear_growth(&self, t_grid: &[f64]) -> bool {
        t_grid.iter().all(|&t| self.eval(t) <= self.scale * t * (1.0 + 1e-12))
    }
}

/// Axis-aligned box, possibly degenerate (zero width in some axis).
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Window {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        debug_assert!(lo.iter().zip(&hi).all(|(a, b)| a <= b));
        Self { lo, hi }
    }

    pub fn dims(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dims()
            && p.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (lo, hi))| *x >= *lo && *x <= *hi)
    }

    /// Measure of the box under `mu = mu1 (x) mu2`: Lebesgue in the first
    /// `D1` axes, Lebesgue or lattice-site counting in the last `D2`.
    pub fn mu_volume(&self, space: &SpaceConfig) -> f64 {
        let d1 = space.d1_dims();
        let mut v = 1.0;
        for r in 0..d1 {
            v *= self.hi[r] - self.lo[r];
        }
        for s in d1..space.total_dims() {
            v *= match space.mu2_kind() {
                Mu2Kind::Lebesgue => self.hi[s] - self.lo[s],
                Mu2Kind::Counting => lattice_sites_half_open(self.lo[s], self.hi[s]),
            };
        }
        v
    }

    /// Box inflated by `r` in every coordinate.
    pub fn inflate(&self, r: f64) -> Window {
        Window::new(
            self.lo.iter().map(|x| x - r).collect(),
            self.hi.iter().map(|x| x + r).collect(),
        )
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }
}

/// Number of lattice sites `n + 1/2` in the half-open interval `[lo, hi)`.
/// Exact for the integer-bounded intervals produced by the grid.
fn lattice_sites_half_open(lo: f64, hi: f64) -> f64 {
    let count = (hi - 0.5).ceil() - (lo - 0.5).ceil();
    count.max(0.0)
}

/// First site index and number of lattice sites `m + 1/2` in `[lo, hi)`.
pub fn lattice_site_range(lo: f64, hi: f64) -> (i64, u64) {
    let start = (lo - 0.5).ceil() as i64;
    let count = lattice_sites_half_open(lo, hi);
    (start, count as u64)
}

/// Ceiling with a snap to the nearest integer, guarding against values such
/// as `4 - 1e-16` produced by `powf`.
pub(crate) fn ceil_snapped(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r
    } else {
        x.ceil()
    }
}

fn check_point(space: &SpaceConfig, point: &[f64]) -> Result<(), GeometryError> {
    if point.len() != space.total_dims() {
        return Err(GeometryError::DimensionMismatch {
            got: point.len(),
            expected: space.total_dims(),
        });
    }
    if point.iter().any(|x| !x.is_finite()) {
        return Err(GeometryError::NonFiniteCoordinate);
    }
    Ok(())
}

/// Applies the stretch/compress map: `(s, t) -> (w^{1/D1} s, T^{-1/D2} t)`.
///
/// With `w = T` the map preserves Lebesgue volume.
pub fn apply_transform(
    space: &SpaceConfig,
    w_of_t: f64,
    t: f64,
    point: &[f64],
) -> Result<Vec<f64>, GeometryError> {
    check_point(space, point)?;
    if t < 1.0 || w_of_t < 1.0 {
        return Err(GeometryError::ParameterOutOfRange("T and w(T) must be >= 1"));
    }
    let d1 = space.d1_dims() as f64;
    let d2 = space.d2_dims() as f64;
    let stretch = w_of_t.powf(1.0 / d1);
    let compress = t.powf(-1.0 / d2);
    Ok(point
        .iter()
        .enumerate()
        .map(|(i, &x)| if i < space.d1_dims() { stretch * x } else { compress * x })
        .collect())
}

/// Inverse of [`apply_transform`].
pub fn invert_transform(
    space: &SpaceConfig,
    w_of_t: f64,
    t: f64,
    point: &[f64],
) -> Result<Vec<f64>, GeometryError> {
    check_point(space, point)?;
    if t < 1.0 || w_of_t < 1.0 {
        return Err(GeometryError::ParameterOutOfRange("T and w(T) must be >= 1"));
    }
    let d1 = space.d1_dims() as f64;
    let d2 = space.d2_dims() as f64;
    let stretch = w_of_t.powf(-1.0 / d1);
    let compress = t.powf(1.0 / d2);
    Ok(point
        .iter()
        .enumerate()
        .map(|(i, &x)| if i < space.d1_dims() { stretch * x } else { compress * x })
        .collect())
}

/// Pre-image window `J_T` of `J = [-1,1]^D`.
pub fn window_j_t(space: &SpaceConfig, w_of_t: f64, t: f64) -> Window {
    let d1 = space.d1_dims();
    let s_half = (1.0 / w_of_t).powf(1.0 / d1 as f64);
    let t_half = t.powf(1.0 / space.d2_dims() as f64);
    let mut lo = vec![-s_half; d1];
    let mut hi = vec![s_half; d1];
    lo.extend(std::iter::repeat_n(-t_half, space.d2_dims()));
    hi.extend(std::iter::repeat_n(t_half, space.d2_dims()));
    Window::new(lo, hi)
}

/// Fixed image window `J = [-1,1]^D`.
pub fn window_j(space: &SpaceConfig) -> Window {
    let d = space.total_dims();
    Window::new(vec![-1.0; d], vec![1.0; d])
}

/// Enlarged image window used with the volume-preserving transform:
/// `[-(T/w)^{1/D1}, (T/w)^{1/D1}]^{D1} x [-1,1]^{D2}`.
pub fn window_j_tilde(space: &SpaceConfig, w_of_t: f64, t: f64) -> Window {
    let d1 = space.d1_dims();
    let s_half = (t / w_of_t).powf(1.0 / d1 as f64);
    let mut lo = vec![-s_half; d1];
    let mut hi = vec![s_half; d1];
    lo.extend(std::iter::repeat_n(-1.0, space.d2_dims()));
    hi.extend(std::iter::repeat_n(1.0, space.d2_dims()));
    Window::new(lo, hi)
}

/// The discretization of `J_T`: `(2 n1 + 2)^{D1} x (2 n2 + 2)^{D2}` cells,
/// half-open on upper faces except at the global upper boundary of `J_T`.
#[derive(Debug, Clone)]
pub struct GridSpec {
    space: SpaceConfig,
    t: f64,
    h: f64,
    w_of_t: f64,
    n1: u64,
    n2: u64,
    /// Pre-image cell width in each stretched axis.
    width1: f64,
    /// Half-extent of `J_T` in each stretched axis.
    s_half: f64,
    /// Half-extent of `J_T` in each compressed axis.
    t_half: f64,
}

impl GridSpec {
    pub fn build(
        space: SpaceConfig,
        schedule: &StretchSchedule,
        t: f64,
        h: f64,
    ) -> Result<Self, GeometryError> {
        Self::build_with_w(space, schedule.eval(t), t, h)
    }

    /// Same as [`GridSpec::build`] with an already evaluated stretch `w(T)`.
    pub fn build_with_w(
        space: SpaceConfig,
        w_of_t: f64,
        t: f64,
        h: f64,
    ) -> Result<Self, GeometryError> {
        if t < 1.0 || h < 1.0 || w_of_t < 1.0 {
            return Err(GeometryError::ParameterOutOfRange("T, h and w(T) must be >= 1"));
        }
        if !space.admits_t(t) {
            return Err(GeometryError::InadmissibleT(t));
        }
        let d1 = space.d1_dims() as f64;
        let d2 = space.d2_dims() as f64;
        let n1 = ceil_snapped(h.powf(1.0 / d1)) as u64 - 1;
        let n2 = ceil_snapped(t.powf(1.0 / d2)) as u64 - 1;
        let width1 = (w_of_t * h).powf(-1.0 / d1);
        let s_half = (1.0 / w_of_t).powf(1.0 / d1);
        let t_half = t.powf(1.0 / d2);
        Ok(Self { space, t, h, w_of_t, n1, n2, width1, s_half, t_half })
    }

    pub fn space(&self) -> &SpaceConfig {
        &self.space
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn w_of_t(&self) -> f64 {
        self.w_of_t
    }

    pub fn n1(&self) -> u64 {
        self.n1
    }

    pub fn n2(&self) -> u64 {
        self.n2
    }

    /// Cells per axis: `2 n1 + 2` in stretched, `2 n2 + 2` in compressed axes.
    pub fn cells_per_axis(&self) -> (u64, u64) {
        (2 * self.n1 + 2, 2 * self.n2 + 2)
    }

    pub fn total_cells(&self) -> u64 {
        let (c1, c2) = self.cells_per_axis();
        c1.pow(self.space.d1_dims() as u32) * c2.pow(self.space.d2_dims() as u32)
    }

    pub fn window(&self) -> Window {
        window_j_t(&self.space, self.w_of_t, self.t)
    }

    fn origin1(&self) -> f64 {
        -((self.n1 + 1) as f64) * self.width1
    }

    fn origin2(&self) -> f64 {
        -((self.n2 + 1) as f64)
    }

    /// The clipped pre-image cell for multi-index `(k, l)`.
    pub fn cell_box(&self, k: &[usize], l: &[usize]) -> Window {
        assert_eq!(k.len(), self.space.d1_dims());
        assert_eq!(l.len(), self.space.d2_dims());
        let mut lo = Vec::with_capacity(self.space.total_dims());
        let mut hi = Vec::with_capacity(self.space.total_dims());
        for &kr in k {
            debug_assert!(kr as u64 <= 2 * self.n1 + 1);
            let a = self.origin1() + kr as f64 * self.width1;
            let b = a + self.width1;
            lo.push(a.max(-self.s_half).min(self.s_half));
            hi.push(b.min(self.s_half).max(-self.s_half));
        }
        for &ls in l {
            debug_assert!(ls as u64 <= 2 * self.n2 + 1);
            let a = self.origin2() + ls as f64;
            let b = a + 1.0;
            lo.push(a.max(-self.t_half).min(self.t_half));
            hi.push(b.min(self.t_half).max(-self.t_half));
        }
        Window::new(lo, hi)
    }

    /// Centre of the clipped cell.
    pub fn cell_center(&self, k: &[usize], l: &[usize]) -> Vec<f64> {
        self.cell_box(k, l).center()
    }

    /// Image of the cell under the transform.
    pub fn image_box(&self, k: &[usize], l: &[usize]) -> Window {
        let b = self.cell_box(k, l);
        let lo = apply_transform(&self.space, self.w_of_t, self.t, &b.lo).expect("finite corner");
        let hi = apply_transform(&self.space, self.w_of_t, self.t, &b.hi).expect("finite corner");
        Window::new(lo, hi)
    }

    /// Reference-measure volume of the clipped cell.
    pub fn cell_mu_volume(&self, k: &[usize], l: &[usize]) -> f64 {
        self.cell_box(k, l).mu_volume(&self.space)
    }

    /// The orderliness gauge `v(C) = mu1([a,b]) mu2([c, d+1])` of the clipped
    /// cell: the compressed-axis extent is inflated by one unit before
    /// measuring.
    pub fn condition2_v(&self, k: &[usize], l: &[usize]) -> f64 {
        let b = self.cell_box(k, l);
        let d1 = self.space.d1_dims();
        let mut v = 1.0;
        for r in 0..d1 {
            v *= b.hi[r] - b.lo[r];
        }
        for s in d1..self.space.total_dims() {
            v *= match self.space.mu2_kind() {
                Mu2Kind::Lebesgue => b.hi[s] + 1.0 - b.lo[s],
                Mu2Kind::Counting => lattice_sites_half_open(b.lo[s], b.hi[s] + 1.0),
            };
        }
        v
    }

    /// Upper bound on the capped-metric diameter of every image cell:
    /// `sqrt(D1 h^{-2/D1} + D2 T^{-2/D2})`.
    pub fn diameter_bound(&self) -> f64 {
        let d1 = self.space.d1_dims() as f64;
        let d2 = self.space.d2_dims() as f64;
        (d1 * self.h.powf(-2.0 / d1) + d2 * self.t.powf(-2.0 / d2)).sqrt()
    }

    /// Cell index of a point of `J_T`. Cells are half-open on upper faces, so
    /// the index is unique; the global upper boundary belongs to the last cell.
    pub fn cell_of(&self, point: &[f64]) -> Result<(Vec<usize>, Vec<usize>), GeometryError> {
        check_point(&self.space, point)?;
        if !self.window().contains(point) {
            return Err(GeometryError::OutsideWindow);
        }
        let d1 = self.space.d1_dims();
        let mut k = Vec::with_capacity(d1);
        for r in 0..d1 {
            let last = (2 * self.n1 + 1) as usize;
            let u = (point[r] - self.origin1()) / self.width1;
            let mut idx = u.floor() as i64;
            if point[r] >= self.s_half {
                idx = last as i64;
            }
            if idx < 0 || idx as usize > last {
                return Err(GeometryError::OutsideWindow);
            }
            k.push(idx as usize);
        }
        let mut l = Vec::with_capacity(self.space.d2_dims());
        for s in d1..self.space.total_dims() {
            let last = (2 * self.n2 + 1) as usize;
            let u = point[s] - self.origin2();
            let mut idx = u.floor() as i64;
            if point[s] >= self.t_half {
                idx = last as i64;
            }
            if idx < 0 || idx as usize > last {
                return Err(GeometryError::OutsideWindow);
            }
            l.push(idx as usize);
        }
        Ok((k, l))
    }

    /// Iterates over all `(k, l)` multi-indices in row-major order.
    pub fn cell_indices(&self) -> impl Iterator<Item = (Vec<usize>, Vec<usize>)> + '_ {
        let (c1, c2) = self.cells_per_axis();
        let d1 = self.space.d1_dims();
        let d2 = self.space.d2_dims();
        let total = self.total_cells();
        (0..total).map(move |mut idx| {
            let mut l = vec![0usize; d2];
            for s in (0..d2).rev() {
                l[s] = (idx % c2) as usize;
                idx /= c2;
            }
            let mut k = vec![0usize; d1];
            for r in (0..d1).rev() {
                k[r] = (idx % c1) as usize;
                idx /= c1;
            }
            (k, l)
        })
    }

    /// Flat row-major index of a multi-index, matching [`GridSpec::cell_indices`].
    pub fn flat_index(&self, k: &[usize], l: &[usize]) -> usize {
        let (c1, c2) = self.cells_per_axis();
        let mut idx = 0u64;
        for &kr in k {
            idx = idx * c1 + kr as u64;
        }
        for &ls in l {
            idx = idx * c2 + ls as u64;
        }
        idx as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space11() -> SpaceConfig {
        SpaceConfig::lebesgue(1, 1).unwrap()
    }

    #[test]
    fn transform_stretches_and_compresses() {
        let sp = space11();
        let y = apply_transform(&sp, 4.0, 4.0, &[0.5, 2.0]).unwrap();
        assert_eq!(y, vec![2.0, 0.5]);

        let id = apply_transform(&sp, 1.0, 1.0, &[0.3, -0.7]).unwrap();
        assert_eq!(id, vec![0.3, -0.7]);

        let sp12 = SpaceConfig::lebesgue(1, 2).unwrap();
        let y = apply_transform(&sp12, 9.0, 4.0, &[1.0, 2.0, 2.0]).unwrap();
        assert_eq!(y, vec![9.0, 1.0, 1.0]);
    }

    #[test]
    fn transform_rejects_bad_input() {
        let sp = space11();
        assert!(apply_transform(&sp, 4.0, 4.0, &[f64::NAN, 0.0]).is_err());
        assert!(apply_transform(&sp, 4.0, 4.0, &[1.0]).is_err());
        assert!(apply_transform(&sp, 0.5, 4.0, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn inverse_composes_to_identity() {
        let sp = SpaceConfig::lebesgue(2, 1).unwrap();
        let x = vec![0.1, -0.2, 3.5];
        let y = apply_transform(&sp, 9.0, 4.0, &x).unwrap();
        let back = invert_transform(&sp, 9.0, 4.0, &y).unwrap();
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        let inv = invert_transform(&sp, 4.0, 4.0, &[2.0, 2.0, 0.5]).unwrap();
        // Inverse of the first example in the 1+1-dimensional case below.
        let sp11 = space11();
        let inv11 = invert_transform(&sp11, 4.0, 4.0, &[2.0, 0.5]).unwrap();
        assert_eq!(inv11, vec![0.5, 2.0]);
        drop(inv);
    }

    #[test]
    fn grid_counts_match_closed_forms() {
        let sp = space11();
        let g = GridSpec::build_with_w(sp, 4.0, 4.0, 4.0).unwrap();
        assert_eq!(g.n1(), 3);
        assert_eq!(g.n2(), 3);
        assert_eq!(g.total_cells(), 64);
        let b = g.cell_box(&[0], &[0]);
        assert!((b.hi[0] - b.lo[0] - 1.0 / 16.0).abs() < 1e-15);

        let g = GridSpec::build_with_w(sp, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(g.n1(), 0);
        assert_eq!(g.n2(), 0);
        assert_eq!(g.total_cells(), 4);
    }

    #[test]
    fn cell_volumes_sum_to_window_volume() {
        // Closed form: mu(J_T) = 2^D T / w.
        let sp = space11();
        for (t, w, h) in [(4.0, 4.0, 4.0), (7.3, 2.5, 3.1), (16.0, 16.0, 1.0), (5.0, 1.5, 9.7)] {
            let g = GridSpec::build_with_w(sp, w, t, h).unwrap();
            let total: f64 = g.cell_indices().map(|(k, l)| g.cell_mu_volume(&k, &l)).sum();
            let expect = 4.0 * t / w;
            assert!(
                (total - expect).abs() < 1e-10 * expect,
                "t={t} w={w} h={h}: {total} vs {expect}"
            );
        }
    }

    #[test]
    fn counting_measure_grid_is_exact() {
        let sp = SpaceConfig::new(1, 1, Mu2Kind::Counting).unwrap();
        assert!(sp.admits_t(4.0));
        assert!(!sp.admits_t(4.5));
        let g = GridSpec::build_with_w(sp, 2.0, 4.0, 2.0).unwrap();
        // Each compressed-axis cell holds exactly one lattice site.
        let total: f64 = g.cell_indices().map(|(k, l)| g.cell_mu_volume(&k, &l)).sum();
        assert!((total - 4.0 * 4.0 / 2.0).abs() < 1e-12);
        for (k, l) in g.cell_indices() {
            let v = g.condition2_v(&k, &l);
            // Inflating by one unit doubles the site count of a unit cell.
            let b = g.cell_box(&k, &l);
            if b.hi[0] > b.lo[0] {
                assert!((v / (b.hi[0] - b.lo[0]) - 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cell_of_agrees_with_box_scan() {
        use rand::Rng;
        let sp = SpaceConfig::lebesgue(1, 2).unwrap();
        let g = GridSpec::build_with_w(sp, 3.0, 6.5, 2.7).unwrap();
        let win = g.window();
        let mut rng = crate::rng::stream(11);
        let cells: Vec<_> = g.cell_indices().collect();
        for _ in 0..2000 {
            let p: Vec<f64> = win
                .lo
                .iter()
                .zip(&win.hi)
                .map(|(a, b)| rng.gen_range(*a..=*b))
                .collect();
            let (k, l) = g.cell_of(&p).unwrap();
            // Membership check against a direct scan over all clipped boxes.
            let mut holders = 0;
            for (kk, ll) in &cells {
                let b = g.cell_box(kk, ll);
                let inside = (0..p.len()).all(|i| {
                    let upper_closed = b.hi[i] >= win.hi[i];
                    p[i] >= b.lo[i] && (p[i] < b.hi[i] || (upper_closed && p[i] <= b.hi[i]))
                });
                if inside {
                    holders += 1;
                    assert_eq!((kk.clone(), ll.clone()), (k.clone(), l.clone()));
                }
            }
            assert_eq!(holders, 1, "point must lie in exactly one half-open cell");
        }
    }

    #[test]
    fn cell_of_handles_corners_and_rejects_outside() {
        let sp = space11();
        let g = GridSpec::build_with_w(sp, 4.0, 4.0, 4.0).unwrap();
        let win = g.window();
        let (k, l) = g.cell_of(&win.lo).unwrap();
        assert_eq!((k, l), (vec![0], vec![0]));
        let (k, l) = g.cell_of(&win.hi).unwrap();
        assert_eq!((k, l), (vec![7], vec![7]));
        for (k, l) in g.cell_indices() {
            let c = g.cell_center(&k, &l);
            assert_eq!(g.cell_of(&c).unwrap(), (k, l));
        }
        assert_eq!(g.cell_of(&[9.0, 0.0]).unwrap_err(), GeometryError::OutsideWindow);
    }

    #[test]
    fn image_cells_respect_diameter_bound() {
        let sp = SpaceConfig::lebesgue(2, 1).unwrap();
        let g = GridSpec::build_with_w(sp, 5.0, 9.0, 6.0).unwrap();
        let bound = g.diameter_bound();
        for (k, l) in g.cell_indices() {
            let b = g.image_box(&k, &l);
            let diag: f64 = b
                .lo
                .iter()
                .zip(&b.hi)
                .map(|(a, c)| (c - a) * (c - a))
                .sum::<f64>()
                .sqrt();
            assert!(diag.min(1.0) <= bound + 1e-12);
        }
    }

    #[test]
    fn volume_preserved_when_w_equals_t() {
        let sp = SpaceConfig::lebesgue(2, 2).unwrap();
        let b = Window::new(vec![0.0, 0.1, -3.0, 2.0], vec![0.2, 0.4, 1.0, 5.0]);
        let lo = apply_transform(&sp, 16.0, 16.0, &b.lo).unwrap();
        let hi = apply_transform(&sp, 16.0, 16.0, &b.hi).unwrap();
        let image = Window::new(lo, hi);
        let v0 = b.mu_volume(&sp);
        let v1 = image.mu_volume(&sp);
        assert!((v0 - v1).abs() <= 1e-12 * v0);
    }
}
