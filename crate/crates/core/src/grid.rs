//! Occupancy lattice used by the world, the memory layer and the planners.

use crate::geometry::Point2;
use serde::{Deserialize, Serialize};

/// Grid cell address. Ordering is row-major so iteration and tie-breaks are stable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(col: usize, row: usize) -> Self {
        Self { row, col }
    }
}

/// Axis-aligned rectangle in meters, used for obstacle rasterization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub fn contains(&self, p: &Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    occupied: Vec<bool>,
}

impl OccupancyGrid {
    /// An all-free grid. Panics if `resolution` is not positive.
    pub fn new(width: usize, height: usize, resolution: f64) -> Self {
        assert!(resolution > 0.0, "grid cell edge must be positive");
        Self {
            width,
            height,
            resolution,
            occupied: vec![false; width * height],
        }
    }

    /// Grid covering `width_m` x `height_m`, with every cell whose center falls
    /// inside one of `obstacles` marked occupied.
    pub fn from_rects(width_m: f64, height_m: f64, resolution: f64, obstacles: &[Rect]) -> Self {
        let width = (width_m / resolution).round().max(1.0) as usize;
        let height = (height_m / resolution).round().max(1.0) as usize;
        let mut grid = Self::new(width, height, resolution);
        for rect in obstacles {
            grid.fill_rect(rect, true);
        }
        grid
    }

    pub fn fill_rect(&mut self, rect: &Rect, occupied: bool) -> Vec<Cell> {
        let mut changed = Vec::new();
        for row in 0..self.height {
            for col in 0..self.width {
                let cell = Cell::new(col, row);
                if rect.contains(&self.cell_center(cell)) && self.is_occupied(cell) != occupied {
                    self.set_occupied(cell, occupied);
                    changed.push(cell);
                }
            }
        }
        changed
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.row * self.width + cell.col
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    pub fn in_bounds(&self, col: i64, row: i64) -> bool {
        col >= 0 && row >= 0 && (col as usize) < self.width && (row as usize) < self.height
    }

    pub fn is_occupied(&self, cell: Cell) -> bool {
        self.occupied[self.index(cell)]
    }

    pub fn set_occupied(&mut self, cell: Cell, occupied: bool) {
        let i = self.index(cell);
        self.occupied[i] = occupied;
    }

    pub fn cell_center(&self, cell: Cell) -> Point2 {
        Point2::new(
            (cell.col as f64 + 0.5) * self.resolution,
            (cell.row as f64 + 0.5) * self.resolution,
        )
    }

    pub fn cell_of(&self, p: &Point2) -> Option<Cell> {
        let col = (p.x / self.resolution).floor();
        let row = (p.y / self.resolution).floor();
        if !col.is_finite() || !row.is_finite() || !self.in_bounds(col as i64, row as i64) {
            return None;
        }
        Some(Cell::new(col as usize, row as usize))
    }

    /// Occupancy at a world point; points outside the grid count as occupied.
    pub fn occupied_at(&self, p: &Point2) -> bool {
        self.cell_of(p).map_or(true, |c| self.is_occupied(c))
    }

    pub fn contains_point(&self, p: &Point2) -> bool {
        self.cell_of(p).is_some()
    }

    /// Copy with every cell within `radius` meters of an occupied cell marked occupied.
    pub fn inflate(&self, radius: f64) -> OccupancyGrid {
        let mut out = self.clone();
        let r_cells = (radius / self.resolution).ceil() as i64;
        let r2 = (radius / self.resolution).powi(2);
        for row in 0..self.height {
            for col in 0..self.width {
                if !self.is_occupied(Cell::new(col, row)) {
                    continue;
                }
                for dr in -r_cells..=r_cells {
                    for dc in -r_cells..=r_cells {
                        if (dr * dr + dc * dc) as f64 > r2 {
                            continue;
                        }
                        let (c, r) = (col as i64 + dc, row as i64 + dr);
                        if self.in_bounds(c, r) {
                            out.set_occupied(Cell::new(c as usize, r as usize), true);
                        }
                    }
                }
            }
        }
        out
    }

    /// Nearest free cell to `cell` by breadth-first ring search.
    pub fn nearest_free(&self, cell: Cell) -> Option<Cell> {
        if !self.is_occupied(cell) {
            return Some(cell);
        }
        let max_r = self.width.max(self.height) as i64;
        for r in 1..=max_r {
            let mut best: Option<(i64, Cell)> = None;
            for dr in -r..=r {
                for dc in -r..=r {
                    if dr.abs() != r && dc.abs() != r {
                        continue;
                    }
                    let (c, rr) = (cell.col as i64 + dc, cell.row as i64 + dr);
                    if !self.in_bounds(c, rr) {
                        continue;
                    }
                    let cand = Cell::new(c as usize, rr as usize);
                    if self.is_occupied(cand) {
                        continue;
                    }
                    let d2 = dr * dr + dc * dc;
                    if best.map_or(true, |(bd, bc)| (d2, cand) < (bd, bc)) {
                        best = Some((d2, cand));
                    }
                }
            }
            if let Some((_, c)) = best {
                return Some(c);
            }
        }
        None
    }

    /// Clear line of sight from `a` to `b`, ignoring the last `ignore_tail` meters
    /// (the target's own footprint).
    pub fn line_of_sight(&self, a: &Point2, b: &Point2, ignore_tail: f64) -> bool {
        let dist = a.distance(b);
        let usable = dist - ignore_tail;
        if usable <= 0.0 {
            return true;
        }
        let step = self.resolution * 0.5;
        let n = (usable / step).ceil() as usize;
        for i in 1..=n {
            let s = (i as f64 * step).min(usable);
            let p = a.lerp(b, s / dist);
            if self.occupied_at(&p) {
                return false;
            }
        }
        true
    }

    pub fn occupied_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.len())
            .filter(|&i| self.occupied[i])
            .map(|i| self.cell_at(i))
    }

    /// Rows as text, top row first in index order; '#' occupied, '.' free.
    pub fn to_rows(&self) -> Vec<String> {
        (0..self.height)
            .map(|row| {
                (0..self.width)
                    .map(|col| if self.is_occupied(Cell::new(col, row)) { '#' } else { '.' })
                    .collect()
            })
            .collect()
    }

    pub fn from_rows(rows: &[String], resolution: f64) -> Result<Self, String> {
        if resolution <= 0.0 || !resolution.is_finite() {
            return Err(format!("resolution must be positive, got {resolution}"));
        }
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut grid = Self::new(width, height, resolution);
        for (row, line) in rows.iter().enumerate() {
            if line.chars().count() != width {
                return Err(format!("row {row} has {} cells, expected {width}", line.chars().count()));
            }
            for (col, ch) in line.chars().enumerate() {
                match ch {
                    '#' => grid.set_occupied(Cell::new(col, row), true),
                    '.' => {}
                    other => return Err(format!("row {row} col {col}: unexpected cell '{other}'")),
                }
            }
        }
        Ok(grid)
    }
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    resolution: f64,
    rows: Vec<String>,
}

impl Serialize for OccupancyGrid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GridRepr {
            resolution: self.resolution,
            rows: self.to_rows(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for OccupancyGrid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = GridRepr::deserialize(d)?;
        OccupancyGrid::from_rows(&repr.rows, repr.resolution).map_err(serde::de::Error::custom)
    }
}
