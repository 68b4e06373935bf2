//! D* Lite on an 8-connected occupancy grid.
//!
//! Search runs backwards from the goal so that start moves and cell changes
//! only repair the affected part of the tree.

use super::cost::PathCost;
use super::PlanningError;
use crate::grid::{Cell, OccupancyGrid};
use std::collections::BTreeSet;

type Key = (PathCost, PathCost);

const NEIGHBOR_OFFSETS: [(i64, i64); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub cells: Vec<Cell>,
    pub cost: PathCost,
}

impl GridPath {
    pub fn length_m(&self, resolution: f64) -> f64 {
        self.cost.to_f64() * resolution
    }
}

/// Cost of the move `from -> to` between adjacent cells. Diagonal moves may not
/// cut an occupied corner.
pub fn edge_cost(grid: &OccupancyGrid, from: Cell, to: Cell) -> PathCost {
    if grid.is_occupied(from) || grid.is_occupied(to) {
        return PathCost::Infinite;
    }
    let dc = to.col as i64 - from.col as i64;
    let dr = to.row as i64 - from.row as i64;
    if dc != 0 && dr != 0 {
        let side_a = Cell::new(to.col, from.row);
        let side_b = Cell::new(from.col, to.row);
        if grid.is_occupied(side_a) || grid.is_occupied(side_b) {
            return PathCost::Infinite;
        }
        PathCost::DIAG
    } else {
        PathCost::AXIS
    }
}

fn neighbors(grid: &OccupancyGrid, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
    NEIGHBOR_OFFSETS.iter().filter_map(move |&(dc, dr)| {
        let c = cell.col as i64 + dc;
        let r = cell.row as i64 + dr;
        grid.in_bounds(c, r).then(|| Cell::new(c as usize, r as usize))
    })
}

#[derive(Debug, Clone)]
pub struct GridPlanner {
    grid: OccupancyGrid,
    start: Cell,
    goal: Cell,
    last_start: Cell,
    km: PathCost,
    g: Vec<PathCost>,
    rhs: Vec<PathCost>,
    queue: BTreeSet<(Key, Cell)>,
    queued: Vec<Option<Key>>,
    expansions: usize,
}

impl GridPlanner {
    pub fn new(grid: OccupancyGrid, start: Cell, goal: Cell) -> Result<Self, PlanningError> {
        for (what, cell) in [("start", start), ("goal", goal)] {
            if !grid.in_bounds(cell.col as i64, cell.row as i64) {
                return Err(PlanningError::InvalidEndpoint(format!("{what} {cell:?} out of bounds")));
            }
            if grid.is_occupied(cell) {
                return Err(PlanningError::InvalidEndpoint(format!("{what} {cell:?} is occupied")));
            }
        }
        let n = grid.len();
        let mut planner = Self {
            grid,
            start,
            goal,
            last_start: start,
            km: PathCost::ZERO,
            g: vec![PathCost::Infinite; n],
            rhs: vec![PathCost::Infinite; n],
            queue: BTreeSet::new(),
            queued: vec![None; n],
            expansions: 0,
        };
        let gi = planner.grid.index(goal);
        planner.rhs[gi] = PathCost::ZERO;
        let key = planner.key(goal);
        planner.push(goal, key);
        Ok(planner)
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn start(&self) -> Cell {
        self.start
    }

    pub fn goal(&self) -> Cell {
        self.goal
    }

    /// Vertex expansions performed so far (diagnostic).
    pub fn expansions(&self) -> usize {
        self.expansions
    }

    fn g_of(&self, c: Cell) -> PathCost {
        self.g[self.grid.index(c)]
    }

    fn rhs_of(&self, c: Cell) -> PathCost {
        self.rhs[self.grid.index(c)]
    }

    fn key(&self, c: Cell) -> Key {
        let m = self.g_of(c).min(self.rhs_of(c));
        (m + PathCost::octile(self.start, c) + self.km, m)
    }

    fn push(&mut self, c: Cell, key: Key) {
        let i = self.grid.index(c);
        if let Some(old) = self.queued[i].take() {
            self.queue.remove(&(old, c));
        }
        self.queue.insert((key, c));
        self.queued[i] = Some(key);
    }

    fn remove(&mut self, c: Cell) {
        let i = self.grid.index(c);
        if let Some(old) = self.queued[i].take() {
            self.queue.remove(&(old, c));
        }
    }

    fn update_vertex(&mut self, u: Cell) {
        let consistent = self.g_of(u) == self.rhs_of(u);
        let queued = self.queued[self.grid.index(u)].is_some();
        if !consistent {
            let k = self.key(u);
            self.push(u, k);
        } else if queued {
            self.remove(u);
        }
    }

    fn best_successor_cost(&self, u: Cell) -> PathCost {
        neighbors(&self.grid, u)
            .map(|s| edge_cost(&self.grid, u, s) + self.g_of(s))
            .min()
            .unwrap_or(PathCost::Infinite)
    }

    pub fn compute(&mut self) {
        loop {
            let Some(&(k_old, u)) = self.queue.first() else {
                break;
            };
            let start_key = self.key(self.start);
            let si = self.grid.index(self.start);
            if k_old >= start_key && self.rhs[si] == self.g[si] {
                break;
            }
            self.expansions += 1;
            let k_new = self.key(u);
            let ui = self.grid.index(u);
            if k_old < k_new {
                self.push(u, k_new);
            } else if self.g[ui] > self.rhs[ui] {
                self.g[ui] = self.rhs[ui];
                self.remove(u);
                let preds: Vec<Cell> = neighbors(&self.grid, u).collect();
                for s in preds {
                    if s != self.goal {
                        let via = edge_cost(&self.grid, s, u) + self.g[ui];
                        let si = self.grid.index(s);
                        if via < self.rhs[si] {
                            self.rhs[si] = via;
                        }
                    }
                    self.update_vertex(s);
                }
            } else {
                let g_old = self.g[ui];
                self.g[ui] = PathCost::Infinite;
                let mut affected: Vec<Cell> = neighbors(&self.grid, u).collect();
                affected.push(u);
                for s in affected {
                    let si = self.grid.index(s);
                    let through_u = if s == u {
                        true
                    } else {
                        self.rhs[si] == edge_cost(&self.grid, s, u) + g_old
                    };
                    if through_u && s != self.goal {
                        self.rhs[si] = self.best_successor_cost(s);
                    }
                    self.update_vertex(s);
                }
            }
        }
    }

    /// Greedy descent over g from the start. Call after [`GridPlanner::compute`].
    pub fn path(&self) -> Result<GridPath, PlanningError> {
        if !self.g_of(self.start).is_finite() {
            return Err(PlanningError::Unreachable);
        }
        let mut cells = vec![self.start];
        let mut cost = PathCost::ZERO;
        let mut cur = self.start;
        while cur != self.goal {
            let mut best: Option<(PathCost, Cell, PathCost)> = None;
            for s in neighbors(&self.grid, cur) {
                let c = edge_cost(&self.grid, cur, s);
                let total = c + self.g_of(s);
                if !total.is_finite() {
                    continue;
                }
                if best.map_or(true, |(bt, bc, _)| (total, s) < (bt, bc)) {
                    best = Some((total, s, c));
                }
            }
            let Some((_, next, step)) = best else {
                return Err(PlanningError::Unreachable);
            };
            cost = cost + step;
            cells.push(next);
            cur = next;
            if cells.len() > self.grid.len() {
                return Err(PlanningError::Unreachable);
            }
        }
        Ok(GridPath { cells, cost })
    }

    /// Move the search start (the robot advanced along its path).
    pub fn set_start(&mut self, start: Cell) {
        if start == self.start {
            return;
        }
        self.km = self.km + PathCost::octile(self.last_start, start);
        self.last_start = start;
        self.start = start;
    }

    /// Apply occupancy changes and repair the plan.
    pub fn update_and_replan(&mut self, changes: &[(Cell, bool)]) -> Result<GridPath, PlanningError> {
        let mut touched = BTreeSet::new();
        for &(cell, occupied) in changes {
            if self.grid.is_occupied(cell) == occupied {
                continue;
            }
            self.grid.set_occupied(cell, occupied);
            touched.insert(cell);
            touched.extend(neighbors(&self.grid, cell));
        }
        for u in touched {
            if u != self.goal {
                let ui = self.grid.index(u);
                self.rhs[ui] = self.best_successor_cost(u);
            }
            self.update_vertex(u);
        }
        self.compute();
        self.path()
    }
}

/// One-shot shortest path.
pub fn plan(grid: &OccupancyGrid, start: Cell, goal: Cell) -> Result<GridPath, PlanningError> {
    let mut planner = GridPlanner::new(grid.clone(), start, goal)?;
    planner.compute();
    planner.path()
}
