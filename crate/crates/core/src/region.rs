//! Target-shape grid geometry, cell occupancy and the coverage/uniformity metrics.
//!
//! A region is a set of square cells of side `l_cell` laid on a uniform grid.
//! Shapes come from ASCII grids (`#` marked, `.` empty) or single-channel
//! rasters (pixel value > 127 marked). Row 0 of the source is the top of the
//! shape; world `y` points up, and the lower-left corner of the source canvas
//! sits at the origin.

use std::collections::VecDeque;
use std::path::Path;

use image::GrayImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Rect, Vec2};

#[derive(Debug, Error)]
pub enum RegionError {
    #[error("shape has no marked cells")]
    Empty,
    #[error("shape is not 4-connected: components of {first} and {second} cells")]
    Disconnected { first: usize, second: usize },
    #[error("line {line} has width {width}, expected {expected}")]
    Ragged {
        line: usize,
        width: usize,
        expected: usize,
    },
    #[error("unexpected character {ch:?} at line {line}, column {column}")]
    BadChar { ch: char, line: usize, column: usize },
    #[error("scale must be positive and finite, got {0}")]
    BadScale(f64),
    #[error("coincident robot positions {0} and {1}")]
    CoincidentRobots(usize, usize),
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

/// Discretized target shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRegion {
    cell_centers: Vec<Vec2>,
    /// Grid coordinates `(col, row_from_bottom)` of each cell.
    cell_coords: Vec<(usize, usize)>,
    l_cell: f64,
    bounds: Rect,
    cols: usize,
    rows: usize,
    /// `cols * rows` lookup from grid position to cell index.
    lookup: Vec<Option<usize>>,
}

impl GridRegion {
    /// Builds a region from a row-major mask where `mask[r][c]` is row `r`
    /// counted from the top.
    pub fn from_mask(mask: &[Vec<bool>], scale: f64) -> Result<Self, RegionError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(RegionError::BadScale(scale));
        }
        let rows = mask.len();
        let cols = mask.first().map_or(0, Vec::len);
        let mut lookup = vec![None; cols * rows];
        let mut cell_centers = Vec::new();
        let mut cell_coords = Vec::new();
        for (r, line) in mask.iter().enumerate() {
            let gy = rows - 1 - r;
            for (c, &marked) in line.iter().enumerate() {
                if marked {
                    lookup[gy * cols + c] = Some(cell_centers.len());
                    cell_centers.push(Vec2::new((c as f64 + 0.5) * scale, (gy as f64 + 0.5) * scale));
                    cell_coords.push((c, gy));
                }
            }
        }
        if cell_centers.is_empty() {
            return Err(RegionError::Empty);
        }
        let region = GridRegion {
            cell_centers,
            cell_coords,
            l_cell: scale,
            bounds: Rect::new(Vec2::ZERO, Vec2::new(cols as f64 * scale, rows as f64 * scale)),
            cols,
            rows,
            lookup,
        };
        let mut sizes = region.component_sizes();
        if sizes.len() > 1 {
            sizes.sort_unstable_by(|a, b| b.cmp(a));
            return Err(RegionError::Disconnected {
                first: sizes[0],
                second: sizes[1],
            });
        }
        Ok(region)
    }

    /// Parses an ASCII grid: rectangular lines of `#` and `.`.
    pub fn from_ascii(text: &str, scale: f64) -> Result<Self, RegionError> {
        let mut mask: Vec<Vec<bool>> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let mut row = Vec::with_capacity(line.len());
            for (column, ch) in line.chars().enumerate() {
                match ch {
                    '#' => row.push(true),
                    '.' => row.push(false),
                    _ => {
                        return Err(RegionError::BadChar {
                            ch,
                            line: idx + 1,
                            column: column + 1,
                        })
                    }
                }
            }
            if let Some(first) = mask.first() {
                if first.len() != row.len() {
                    return Err(RegionError::Ragged {
                        line: idx + 1,
                        width: row.len(),
                        expected: first.len(),
                    });
                }
            }
            mask.push(row);
        }
        Self::from_mask(&mask, scale)
    }

    /// Single-channel raster; pixels brighter than 127 are marked.
    pub fn from_image(img: &GrayImage, scale: f64) -> Result<Self, RegionError> {
        let mask: Vec<Vec<bool>> = (0..img.height())
            .map(|y| (0..img.width()).map(|x| img.get_pixel(x, y).0[0] > 127).collect())
            .collect();
        Self::from_mask(&mask, scale)
    }

    /// Loads a shape file: `.txt`/`.grid` as ASCII, anything else as a raster.
    pub fn load(path: &Path, scale: f64) -> Result<Self, RegionError> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("txt") | Some("grid") => {
                let text = std::fs::read_to_string(path).map_err(|source| RegionError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                Self::from_ascii(&text, scale)
            }
            _ => {
                let img = image::open(path)?.to_luma8();
                Self::from_image(&img, scale)
            }
        }
    }

    pub fn n_cell(&self) -> usize {
        self.cell_centers.len()
    }

    pub fn l_cell(&self) -> f64 {
        self.l_cell
    }

    pub fn cell_centers(&self) -> &[Vec2] {
        &self.cell_centers
    }

    pub fn bounds(&self) -> Rect {
        self.bounds
    }

    /// Whether `p` lies inside one of the region's cells.
    pub fn contains(&self, p: Vec2) -> bool {
        self.cell_at(p).is_some()
    }

    /// Index of the cell containing `p`, if any.
    pub fn cell_at(&self, p: Vec2) -> Option<usize> {
        let fx = (p.x - self.bounds.min.x) / self.l_cell;
        let fy = (p.y - self.bounds.min.y) / self.l_cell;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (c, r) = (fx.floor() as usize, fy.floor() as usize);
        if c >= self.cols || r >= self.rows {
            return None;
        }
        self.lookup[r * self.cols + c]
    }

    fn neighbors4(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (c, r) = self.cell_coords[idx];
        let candidates = [
            (c.wrapping_sub(1), r),
            (c + 1, r),
            (c, r.wrapping_sub(1)),
            (c, r + 1),
        ];
        candidates.into_iter().filter_map(move |(cc, rr)| {
            if cc < self.cols && rr < self.rows {
                self.lookup[rr * self.cols + cc]
            } else {
                None
            }
        })
    }

    /// Sizes of the 4-connected components, in discovery order.
    fn component_sizes(&self) -> Vec<usize> {
        let mut seen = vec![false; self.n_cell()];
        let mut sizes = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..self.n_cell() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut size = 0;
            while let Some(k) = queue.pop_front() {
                size += 1;
                for n in self.neighbors4(k) {
                    if !seen[n] {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                }
            }
            sizes.push(size);
        }
        sizes
    }
}

/// Per-cell occupancy.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyMap {
    pub occupied: Vec<bool>,
    /// Nearest robot within `r_avoid`; ties go to the lowest id.
    pub occupant: Vec<Option<usize>>,
}

impl OccupancyMap {
    pub fn n_occupied(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }
}

/// A cell is occupied iff some robot is strictly closer than `r_avoid` to its center.
pub fn compute_occupancy(region: &GridRegion, positions: &[Vec2], r_avoid: f64) -> OccupancyMap {
    let r2 = r_avoid * r_avoid;
    let mut occupied = Vec::with_capacity(region.n_cell());
    let mut occupant = Vec::with_capacity(region.n_cell());
    for &c in region.cell_centers() {
        let mut best: Option<(usize, f64)> = None;
        for (id, &p) in positions.iter().enumerate() {
            let d2 = (p - c).norm_sq();
            if d2 < r2 && best.is_none_or(|(_, bd)| d2 < bd) {
                best = Some((id, d2));
            }
        }
        occupied.push(best.is_some());
        occupant.push(best.map(|(id, _)| id));
    }
    OccupancyMap { occupied, occupant }
}

/// Coverage rate M1: fraction of cells occupied.
pub fn coverage_rate(region: &GridRegion, positions: &[Vec2], r_avoid: f64) -> f64 {
    compute_occupancy(region, positions, r_avoid).n_occupied() as f64 / region.n_cell() as f64
}

/// Number of cells whose nearest robot is `i`, for every robot (ties to the lowest id).
pub fn voronoi_counts(region: &GridRegion, positions: &[Vec2]) -> Result<Vec<usize>, RegionError> {
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            if positions[i] == positions[j] {
                return Err(RegionError::CoincidentRobots(i, j));
            }
        }
    }
    let mut counts = vec![0usize; positions.len()];
    if positions.is_empty() {
        return Ok(counts);
    }
    for &c in region.cell_centers() {
        let mut best = 0;
        let mut best_d2 = f64::INFINITY;
        for (id, &p) in positions.iter().enumerate() {
            let d2 = (p - c).norm_sq();
            if d2 < best_d2 {
                best = id;
                best_d2 = d2;
            }
        }
        counts[best] += 1;
    }
    Ok(counts)
}

/// Uniformity M2: population variance of the per-robot Voronoi cell counts.
pub fn uniformity(region: &GridRegion, positions: &[Vec2]) -> Result<f64, RegionError> {
    let counts = voronoi_counts(region, positions)?;
    Ok(count_variance(&counts))
}

/// Population variance of a list of counts; zero for an empty list.
pub fn count_variance(counts: &[usize]) -> f64 {
    if counts.is_empty() {
        return 0.0;
    }
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<usize>() as f64 / n;
    counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / n
}

/// Whether the region has room for `n_robot` disks: `4 n r² <= n_cell l²`.
pub fn capacity_check(n_robot: usize, r_avoid: f64, region: &GridRegion) -> bool {
    4.0 * n_robot as f64 * r_avoid * r_avoid <= region.n_cell() as f64 * region.l_cell() * region.l_cell()
}

/// One row of the per-step metrics CSV (`step,M1,M2,n_collisions`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub step: usize,
    #[serde(rename = "M1")]
    pub m1: f64,
    #[serde(rename = "M2")]
    pub m2: f64,
    pub n_collisions: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(n: usize, m: usize) -> String {
        (0..n).map(|_| "#".repeat(m) + "\n").collect()
    }

    #[test]
    fn block_and_l_glyph() {
        let r = GridRegion::from_ascii(&block(3, 3), 0.1).unwrap();
        assert_eq!(r.n_cell(), 9);
        assert_eq!(r.l_cell(), 0.1);
        let l = GridRegion::from_ascii("#..\n#..\n###\n", 0.1).unwrap();
        assert_eq!(l.n_cell(), 5);
    }

    #[test]
    fn cell_centers_are_on_grid() {
        let r = GridRegion::from_ascii("##\n#.\n", 0.5).unwrap();
        // Top row comes first; world y points up.
        assert_eq!(
            r.cell_centers(),
            &[Vec2::new(0.25, 0.75), Vec2::new(0.75, 0.75), Vec2::new(0.25, 0.25)]
        );
        assert!(r.contains(Vec2::new(0.9, 0.9)));
        assert!(!r.contains(Vec2::new(0.9, 0.1)));
        assert!(!r.contains(Vec2::new(-0.1, 0.1)));
    }

    #[test]
    fn rejects_empty_and_disconnected() {
        assert!(matches!(GridRegion::from_ascii("...\n...\n", 0.1), Err(RegionError::Empty)));
        assert!(matches!(GridRegion::from_ascii("", 0.1), Err(RegionError::Empty)));
        match GridRegion::from_ascii("##..\n##.#\n", 0.1) {
            Err(RegionError::Disconnected { first, second }) => assert_eq!((first, second), (4, 1)),
            other => panic!("expected disconnected, got {other:?}"),
        }
        // Diagonal contact does not connect.
        assert!(GridRegion::from_ascii("#.\n.#\n", 0.1).is_err());
    }

    #[test]
    fn rejects_malformed_text() {
        assert!(matches!(GridRegion::from_ascii("##\n#\n", 0.1), Err(RegionError::Ragged { line: 2, .. })));
        assert!(matches!(GridRegion::from_ascii("#x\n", 0.1), Err(RegionError::BadChar { ch: 'x', .. })));
        assert!(matches!(GridRegion::from_ascii("#\n", 0.0), Err(RegionError::BadScale(_))));
    }

    #[test]
    fn occupancy_strict_inequality() {
        let r = GridRegion::from_ascii(&block(1, 1), 0.2).unwrap();
        let c = r.cell_centers()[0];
        assert!(compute_occupancy(&r, &[c], 0.1).occupied[0]);
        let occ = compute_occupancy(&r, &[c + Vec2::new(0.1, 0.0)], 0.1);
        assert!(!occ.occupied[0]);
    }

    #[test]
    fn occupant_is_nearest_then_lowest_id() {
        let r = GridRegion::from_ascii("#\n", 1.0).unwrap();
        let c = r.cell_centers()[0];
        let occ = compute_occupancy(&r, &[c + Vec2::new(0.05, 0.0), c + Vec2::new(0.02, 0.0)], 0.1);
        assert_eq!(occ.occupant[0], Some(1));
        let occ = compute_occupancy(&r, &[c + Vec2::new(0.25, 0.0), c - Vec2::new(0.25, 0.0)], 0.5);
        assert_eq!(occ.occupant[0], Some(0));
    }

    #[test]
    fn metrics_extremes() {
        let r = GridRegion::from_ascii(&block(2, 2), 0.1).unwrap();
        let all: Vec<Vec2> = r.cell_centers().to_vec();
        assert_eq!(coverage_rate(&r, &all, 0.05), 1.0);
        assert_eq!(coverage_rate(&r, &[Vec2::new(5.0, 5.0)], 0.1), 0.0);
        assert_eq!(count_variance(&[2, 4, 6]), 8.0 / 3.0);
    }

    #[test]
    fn symmetric_pair_has_zero_uniformity() {
        let r = GridRegion::from_ascii(&block(2, 4), 0.1).unwrap();
        let u = uniformity(&r, &[Vec2::new(0.1, 0.1), Vec2::new(0.3, 0.1)]).unwrap();
        assert_eq!(u, 0.0);
    }

    #[test]
    fn uniformity_rejects_coincident_robots() {
        let r = GridRegion::from_ascii(&block(2, 2), 0.1).unwrap();
        let p = Vec2::new(0.1, 0.1);
        assert!(matches!(uniformity(&r, &[p, p]), Err(RegionError::CoincidentRobots(0, 1))));
    }

    #[test]
    fn capacity_arithmetic() {
        let mask = vec![vec![true; 18]; 10];
        let r = GridRegion::from_mask(&mask, 0.1).unwrap();
        assert_eq!(r.n_cell(), 180);
        assert!(capacity_check(30, 0.1, &r));
        assert!(capacity_check(0, 0.1, &r));
        let r100 = GridRegion::from_mask(&vec![vec![true; 10]; 10], 0.1).unwrap();
        assert!(!capacity_check(50, 0.1, &r100));
    }
}
