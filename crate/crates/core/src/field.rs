//! Discretized maps into the target ball over one disk or the bidisk.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom;
use crate::grid::{AngularScheme, Derivs, DiskGrid};

/// Tensor product of two disk grids. Node `(p1, p2)` lives at `p1 * n2 + p2`
/// so the first factor's angle is the outermost index.
#[derive(Clone, Debug, PartialEq)]
pub struct BidiskGrid {
    pub first: DiskGrid,
    pub second: DiskGrid,
}

/// Serializable description of a grid, used in snapshot headers and configs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nr: usize,
    pub ntheta: usize,
    pub grading: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<DiskGrid> {
        DiskGrid::new(self.nr, self.ntheta, self.grading)
    }

    pub fn of(g: &DiskGrid) -> Self {
        Self {
            nr: g.nr(),
            ntheta: g.ntheta(),
            grading: g.grading(),
        }
    }
}

impl BidiskGrid {
    pub fn new(first: DiskGrid, second: DiskGrid) -> Self {
        Self { first, second }
    }

    /// Same factor grid in both slots.
    pub fn square(g: DiskGrid) -> Self {
        Self {
            first: g.clone(),
            second: g,
        }
    }

    pub fn len(&self) -> usize {
        self.first.len() * self.second.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, p1: usize, p2: usize) -> usize {
        p1 * self.second.len() + p2
    }

    #[inline]
    pub fn split(&self, p: usize) -> (usize, usize) {
        let n2 = self.second.len();
        (p / n2, p % n2)
    }

    /// On the topological boundary (either factor on its circle).
    #[inline]
    pub fn is_boundary(&self, p: usize) -> bool {
        let (p1, p2) = self.split(p);
        self.first.is_boundary(p1) || self.second.is_boundary(p2)
    }

    /// On the distinguished boundary (both factors on their circles).
    #[inline]
    pub fn is_corner(&self, p: usize) -> bool {
        let (p1, p2) = self.split(p);
        self.first.is_boundary(p1) && self.second.is_boundary(p2)
    }

    /// `(rho1, rho2)` at a node.
    pub fn rhos(&self, p: usize) -> (f64, f64) {
        let (p1, p2) = self.split(p);
        (
            self.first.rho(p1 % self.first.nr()),
            self.second.rho(p2 % self.second.nr()),
        )
    }

    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&p| !self.is_boundary(p))
    }
}

/// A map from one disk into the closed ball `B^{dim}`; values are stored
/// node-major with `dim` contiguous components.
#[derive(Clone, Debug, PartialEq)]
pub struct MapField1 {
    pub grid: DiskGrid,
    pub dim: usize,
    pub values: Vec<f64>,
}

/// A map from the bidisk into the closed ball.
#[derive(Clone, Debug, PartialEq)]
pub struct MapField2 {
    pub grid: BidiskGrid,
    pub dim: usize,
    pub values: Vec<f64>,
}

fn check_dim(dim: usize) -> Result<()> {
    if !(2..=crate::MAX_TARGET_DIM).contains(&dim) {
        return Err(Error::ShapeMismatch(format!(
            "target dimension {dim} outside 2..={}",
            crate::MAX_TARGET_DIM
        )));
    }
    Ok(())
}

impl MapField1 {
    pub fn zeros(grid: DiskGrid, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let n = grid.len();
        Ok(Self {
            grid,
            dim,
            values: vec![0.0; n * dim],
        })
    }

    pub fn from_fn(grid: DiskGrid, dim: usize, f: impl Fn([f64; 2]) -> Vec<f64>) -> Result<Self> {
        let mut out = Self::zeros(grid, dim)?;
        for j in 0..out.grid.ntheta() {
            for i in 0..out.grid.nr() {
                let p = out.grid.idx(i, j);
                let v = f(out.grid.zeta(i, j));
                out.values[p * dim..(p + 1) * dim].copy_from_slice(&v[..dim]);
            }
        }
        Ok(out)
    }

    #[inline]
    pub fn at(&self, p: usize) -> &[f64] {
        &self.values[p * self.dim..(p + 1) * self.dim]
    }

    #[inline]
    pub fn at_mut(&mut self, p: usize) -> &mut [f64] {
        &mut self.values[p * self.dim..(p + 1) * self.dim]
    }

    pub fn component(&self, c: usize) -> Vec<f64> {
        self.values.iter().skip(c).step_by(self.dim).copied().collect()
    }

    pub fn set_component(&mut self, c: usize, f: &[f64]) {
        for (p, v) in f.iter().enumerate() {
            self.values[p * self.dim + c] = *v;
        }
    }

    /// First interior node with `|u| >= 1`, if any.
    pub fn check_interior(&self) -> Result<()> {
        for p in 0..self.grid.len() {
            if self.grid.is_boundary(p) {
                continue;
            }
            let n = geom::norm_sq(self.at(p));
            if n >= 1.0 || !n.is_finite() {
                return Err(Error::BoundaryContact {
                    node: p,
                    norm: n.sqrt(),
                });
            }
        }
        Ok(())
    }

    pub fn sup_distance(&self, other: &MapField1) -> Result<f64> {
        if self.grid != other.grid || self.dim != other.dim {
            return Err(Error::ShapeMismatch("fields live on different grids".into()));
        }
        Ok((0..self.grid.len())
            .filter(|&p| !self.grid.is_boundary(p))
            .map(|p| geom::ball_distance_unchecked(self.at(p), other.at(p)))
            .fold(0.0, f64::max))
    }
}

impl MapField2 {
    pub fn zeros(grid: BidiskGrid, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let n = grid.len();
        Ok(Self {
            grid,
            dim,
            values: vec![0.0; n * dim],
        })
    }

    /// Sample `f(zeta1, zeta2)` at every node.
    pub fn from_fn(
        grid: BidiskGrid,
        dim: usize,
        f: impl Fn([f64; 2], [f64; 2], &mut [f64]) + Sync,
    ) -> Result<Self> {
        let mut out = Self::zeros(grid, dim)?;
        let g = out.grid.clone();
        let n2 = g.second.len();
        out.values
            .par_chunks_mut(n2 * dim)
            .enumerate()
            .for_each(|(p1, row)| {
                let (i1, j1) = g.first.split(p1);
                let z1 = g.first.zeta(i1, j1);
                for p2 in 0..n2 {
                    let (i2, j2) = g.second.split(p2);
                    f(z1, g.second.zeta(i2, j2), &mut row[p2 * dim..(p2 + 1) * dim]);
                }
            });
        Ok(out)
    }

    #[inline]
    pub fn at(&self, p: usize) -> &[f64] {
        &self.values[p * self.dim..(p + 1) * self.dim]
    }

    #[inline]
    pub fn at_mut(&mut self, p: usize) -> &mut [f64] {
        &mut self.values[p * self.dim..(p + 1) * self.dim]
    }

    pub fn check_interior(&self) -> Result<()> {
        for p in 0..self.grid.len() {
            if self.grid.is_corner(p) {
                continue;
            }
            let n = geom::norm_sq(self.at(p));
            if n >= 1.0 || !n.is_finite() {
                return Err(Error::BoundaryContact {
                    node: p,
                    norm: n.sqrt(),
                });
            }
        }
        Ok(())
    }

    pub fn same_shape(&self, other: &MapField2) -> Result<()> {
        if self.grid != other.grid || self.dim != other.dim {
            return Err(Error::ShapeMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    /// Pointwise hyperbolic distance; corner nodes (both on the sphere) get 0
    /// when the values agree and `inf` otherwise.
    pub fn distance_field(&self, other: &MapField2) -> Result<Vec<f64>> {
        self.same_shape(other)?;
        Ok((0..self.grid.len())
            .into_par_iter()
            .map(|p| {
                let (a, b) = (self.at(p), other.at(p));
                if self.grid.is_corner(p) {
                    if a == b {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    geom::ball_distance_unchecked(a, b)
                }
            })
            .collect())
    }

    /// Sup of the hyperbolic distance over non-corner nodes.
    pub fn sup_distance(&self, other: &MapField2) -> Result<f64> {
        self.same_shape(other)?;
        Ok((0..self.grid.len())
            .into_par_iter()
            .filter(|&p| !self.grid.is_corner(p))
            .map(|p| geom::ball_distance_unchecked(self.at(p), other.at(p)))
            .reduce(|| 0.0, f64::max))
    }

    /// Copy of the disk-2 slice at a fixed first-factor node.
    pub fn slice_second(&self, p1: usize) -> MapField1 {
        let n2 = self.grid.second.len();
        let start = self.grid.idx(p1, 0) * self.dim;
        MapField1 {
            grid: self.grid.second.clone(),
            dim: self.dim,
            values: self.values[start..start + n2 * self.dim].to_vec(),
        }
    }

    /// Copy of the disk-1 slice at a fixed second-factor node.
    pub fn slice_first(&self, p2: usize) -> MapField1 {
        let n1 = self.grid.first.len();
        let mut values = Vec::with_capacity(n1 * self.dim);
        for p1 in 0..n1 {
            values.extend_from_slice(self.at(self.grid.idx(p1, p2)));
        }
        MapField1 {
            grid: self.grid.first.clone(),
            dim: self.dim,
            values,
        }
    }
}

/// Factorwise polar derivatives of a scalar bidisk field.
pub struct BidiskDerivs {
    pub first: Derivs,
    pub second: Derivs,
}

/// Derivatives of a scalar bidisk field along each factor. Entries on nodes
/// where the differentiated factor sits on its circle are zero.
pub fn bidisk_derivs(grid: &BidiskGrid, f: &[f64], scheme: AngularScheme) -> BidiskDerivs {
    let n1 = grid.first.len();
    let n2 = grid.second.len();
    let mut second = Derivs::zeros(f.len());
    {
        let Derivs { fr, frr, ft, ftt } = &mut second;
        fr.par_chunks_mut(n2)
            .zip(frr.par_chunks_mut(n2))
            .zip(ft.par_chunks_mut(n2).zip(ftt.par_chunks_mut(n2)))
            .zip(f.par_chunks(n2))
            .for_each_init(
                || (grid.second.differ(scheme), Derivs::zeros(n2)),
                |(differ, d), (((a, b), (c, e)), row)| {
                    differ.apply(row, d);
                    a.copy_from_slice(&d.fr);
                    b.copy_from_slice(&d.frr);
                    c.copy_from_slice(&d.ft);
                    e.copy_from_slice(&d.ftt);
                },
            );
    }
    let mut first = Derivs::zeros(f.len());
    let cols: Vec<Derivs> = (0..n2)
        .into_par_iter()
        .map_init(
            || grid.first.differ(scheme),
            |differ, p2| {
                let col: Vec<f64> = (0..n1).map(|p1| f[p1 * n2 + p2]).collect();
                let mut d = Derivs::zeros(n1);
                differ.apply(&col, &mut d);
                d
            },
        )
        .collect();
    for (p2, d) in cols.iter().enumerate() {
        for p1 in 0..n1 {
            let p = p1 * n2 + p2;
            first.fr[p] = d.fr[p1];
            first.frr[p] = d.frr[p1];
            first.ft[p] = d.ft[p1];
            first.ftt[p] = d.ftt[p1];
        }
    }
    BidiskDerivs { first, second }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_puts_first_factor_outermost() {
        let g = BidiskGrid::new(DiskGrid::uniform(5, 6).unwrap(), DiskGrid::uniform(6, 8).unwrap());
        assert_eq!(g.len(), 30 * 48);
        assert_eq!(g.idx(2, 7), 2 * 48 + 7);
        assert_eq!(g.split(g.idx(29, 47)), (29, 47));
        let corner = g.idx(g.first.idx(4, 3), g.second.idx(5, 1));
        assert!(g.is_corner(corner));
        let face = g.idx(g.first.idx(4, 3), g.second.idx(2, 1));
        assert!(g.is_boundary(face) && !g.is_corner(face));
        assert_eq!(g.interior().count(), 24 * 40);
    }

    #[test]
    fn slices_match_direct_indexing() {
        let g = BidiskGrid::square(DiskGrid::uniform(5, 6).unwrap());
        let u = MapField2::from_fn(g.clone(), 2, |a, b, out| {
            out[0] = 0.5 * a[0] * b[0];
            out[1] = 0.5 * a[1] + 0.1 * b[1];
        })
        .unwrap();
        let s = u.slice_first(7);
        for p1 in 0..g.first.len() {
            assert_eq!(s.at(p1), u.at(g.idx(p1, 7)));
        }
        let s = u.slice_second(4);
        for p2 in 0..g.second.len() {
            assert_eq!(s.at(p2), u.at(g.idx(4, p2)));
        }
    }

    #[test]
    fn bidisk_derivatives_separate_factors() {
        let g = BidiskGrid::square(DiskGrid::uniform(12, 12).unwrap());
        let mut f = vec![0.0; g.len()];
        for p in 0..g.len() {
            let (p1, p2) = g.split(p);
            let (i1, j1) = g.first.split(p1);
            let (i2, j2) = g.second.split(p2);
            let z1 = g.first.zeta(i1, j1);
            let z2 = g.second.zeta(i2, j2);
            f[p] = z1[0] * z1[0] + z2[1];
        }
        let d = bidisk_derivs(&g, &f, AngularScheme::Spectral);
        for p in g.interior() {
            let (p1, p2) = g.split(p);
            let r1 = g.first.radius(p1 % 12);
            let r2 = g.second.radius(p2 % 12);
            // Euclidean Laplacian of x1^2 is 2 and of y2 is 0.
            assert!((d.first.laplacian(p, r1) - 2.0).abs() < 1e-9);
            assert!(d.second.laplacian(p, r2).abs() < 1e-9);
        }
    }
}
