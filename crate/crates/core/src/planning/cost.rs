use crate::grid::Cell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

/// Path cost on the 8-connected lattice, held exactly as `axis + diag * sqrt(2)`.
///
/// Integer bookkeeping keeps costs produced by different summation orders
/// bit-for-bit comparable, so incremental and from-scratch searches agree exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathCost {
    Finite { axis: i64, diag: i64 },
    Infinite,
}

impl PathCost {
    pub const ZERO: PathCost = PathCost::Finite { axis: 0, diag: 0 };
    pub const AXIS: PathCost = PathCost::Finite { axis: 1, diag: 0 };
    pub const DIAG: PathCost = PathCost::Finite { axis: 0, diag: 1 };

    pub fn is_finite(&self) -> bool {
        matches!(self, PathCost::Finite { .. })
    }

    pub fn to_f64(&self) -> f64 {
        match *self {
            PathCost::Finite { axis, diag } => axis as f64 + diag as f64 * std::f64::consts::SQRT_2,
            PathCost::Infinite => f64::INFINITY,
        }
    }

    /// Octile distance between two cells: admissible and consistent for this lattice.
    pub fn octile(a: Cell, b: Cell) -> PathCost {
        let dx = (a.col as i64 - b.col as i64).abs();
        let dy = (a.row as i64 - b.row as i64).abs();
        PathCost::Finite {
            axis: dx.max(dy) - dx.min(dy),
            diag: dx.min(dy),
        }
    }
}

impl Add for PathCost {
    type Output = PathCost;
    fn add(self, rhs: PathCost) -> PathCost {
        match (self, rhs) {
            (PathCost::Finite { axis: a1, diag: d1 }, PathCost::Finite { axis: a2, diag: d2 }) => PathCost::Finite {
                axis: a1 + a2,
                diag: d1 + d2,
            },
            _ => PathCost::Infinite,
        }
    }
}

/// Sign of `da + db * sqrt(2)`.
fn sign_of(da: i64, db: i64) -> Ordering {
    match (da.cmp(&0), db.cmp(&0)) {
        (Ordering::Equal, o) | (o, Ordering::Equal) => o,
        (Ordering::Greater, Ordering::Greater) => Ordering::Greater,
        (Ordering::Less, Ordering::Less) => Ordering::Less,
        (Ordering::Greater, Ordering::Less) => {
            // da > |db| sqrt 2  <=>  da^2 > 2 db^2
            (da as i128 * da as i128).cmp(&(2 * db as i128 * db as i128))
        }
        (Ordering::Less, Ordering::Greater) => {
            (2 * db as i128 * db as i128).cmp(&(da as i128 * da as i128))
        }
    }
}

impl Ord for PathCost {
    fn cmp(&self, other: &Self) -> Ordering {
        match (*self, *other) {
            (PathCost::Infinite, PathCost::Infinite) => Ordering::Equal,
            (PathCost::Infinite, _) => Ordering::Greater,
            (_, PathCost::Infinite) => Ordering::Less,
            (PathCost::Finite { axis: a1, diag: d1 }, PathCost::Finite { axis: a2, diag: d2 }) => sign_of(a1 - a2, d1 - d2),
        }
    }
}

impl PartialOrd for PathCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PathCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathCost::Finite { axis, diag } => write!(f, "{axis}+{diag}√2"),
            PathCost::Infinite => write!(f, "∞"),
        }
    }
}
