//! Square-grid geometry shared by the world, planners, and segmentation.
//!
//! Cells are indexed row-major: `cell = row * n + col`, row 0 at the top.
//! "North" decreases the row. Neighbor iterators yield a fixed order
//! (N, E, S, W and N, NE, E, SE, S, SW, W, NW) so that tie-breaking on
//! iteration order is deterministic.

pub type CellId = usize;

/// Movement connectivity: cardinal-only or cardinal plus diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    pub fn degree(self) -> u8 {
        match self {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }
}

/// Geometry of an `n`×`n` grid. Copyable view, holds no cell data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "grid side must be at least 2, got {n}");
        Grid { n }
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn row(&self, cell: CellId) -> usize {
        cell / self.n
    }

    pub fn col(&self, cell: CellId) -> usize {
        cell % self.n
    }

    pub fn cell(&self, row: usize, col: usize) -> CellId {
        debug_assert!(row < self.n && col < self.n);
        row * self.n + col
    }

    pub fn contains(&self, cell: CellId) -> bool {
        cell < self.len()
    }

    /// 4-connected neighbors in N, E, S, W order.
    pub fn neighbors4(&self, cell: CellId) -> impl Iterator<Item = CellId> + '_ {
        let (r, c) = (self.row(cell) as isize, self.col(cell) as isize);
        DIRS4
            .iter()
            .filter_map(move |&(dr, dc)| self.offset(r + dr, c + dc))
    }

    /// 8-connected neighbors in N, NE, E, SE, S, SW, W, NW order.
    pub fn neighbors8(&self, cell: CellId) -> impl Iterator<Item = CellId> + '_ {
        let (r, c) = (self.row(cell) as isize, self.col(cell) as isize);
        DIRS8
            .iter()
            .filter_map(move |&(dr, dc)| self.offset(r + dr, c + dc))
    }

    fn offset(&self, r: isize, c: isize) -> Option<CellId> {
        let n = self.n as isize;
        if r >= 0 && r < n && c >= 0 && c < n {
            Some((r * n + c) as CellId)
        } else {
            None
        }
    }

    pub fn manhattan(&self, a: CellId, b: CellId) -> usize {
        self.row(a).abs_diff(self.row(b)) + self.col(a).abs_diff(self.col(b))
    }

    /// Whether `a` and `b` are distinct neighboring cells under `conn`.
    pub fn adjacent(&self, a: CellId, b: CellId, conn: Connectivity) -> bool {
        if a == b || !self.contains(a) || !self.contains(b) {
            return false;
        }
        let dr = self.row(a).abs_diff(self.row(b));
        let dc = self.col(a).abs_diff(self.col(b));
        match conn {
            Connectivity::Four => dr + dc == 1,
            Connectivity::Eight => dr <= 1 && dc <= 1,
        }
    }
}

const DIRS4: [(isize, isize); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];
const DIRS8: [(isize, isize); 8] = [
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_roundtrip() {
        let g = Grid::new(5);
        for cell in 0..g.len() {
            assert_eq!(g.cell(g.row(cell), g.col(cell)), cell);
        }
    }

    #[test]
    fn corner_neighbors() {
        let g = Grid::new(3);
        // top-left corner: only E and S exist
        assert_eq!(g.neighbors4(0).collect::<Vec<_>>(), vec![1, 3]);
        // center: all four, in N, E, S, W order
        assert_eq!(g.neighbors4(4).collect::<Vec<_>>(), vec![1, 5, 7, 3]);
        // bottom-right corner, 8-connected: E/SE/S/SW missing
        assert_eq!(g.neighbors8(8).collect::<Vec<_>>(), vec![5, 7, 4]);
    }

    #[test]
    fn manhattan_distance() {
        let g = Grid::new(4);
        assert_eq!(g.manhattan(0, 15), 6);
        assert_eq!(g.manhattan(5, 5), 0);
    }

    #[test]
    fn adjacency_by_connectivity() {
        let g = Grid::new(24);
        assert!(g.adjacent(0, 1, Connectivity::Four));
        assert!(!g.adjacent(0, 25, Connectivity::Four)); // diagonal
        assert!(g.adjacent(0, 25, Connectivity::Eight));
        assert!(!g.adjacent(0, 0, Connectivity::Eight)); // self
        assert!(!g.adjacent(23, 24, Connectivity::Eight)); // row wrap is not adjacency
    }
}
