//! Structured triangulation of a rectangle.

use std::io::Write;

use crate::error::{Error, Result};

/// Axis-aligned rectangle `(x0, x1) × (y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

impl Default for Rect {
    fn default() -> Self {
        Self::new(-1.0, 1.0, -1.0, 1.0)
    }
}

/// Outward normal of a boundary edge of the rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryNormal {
    MinusX,
    PlusX,
    MinusY,
    PlusY,
}

impl BoundaryNormal {
    pub const ALL: [BoundaryNormal; 4] = [
        BoundaryNormal::MinusX,
        BoundaryNormal::PlusX,
        BoundaryNormal::MinusY,
        BoundaryNormal::PlusY,
    ];

    pub fn vector(self) -> [f64; 3] {
        match self {
            BoundaryNormal::MinusX => [-1.0, 0.0, 0.0],
            BoundaryNormal::PlusX => [1.0, 0.0, 0.0],
            BoundaryNormal::MinusY => [0.0, -1.0, 0.0],
            BoundaryNormal::PlusY => [0.0, 1.0, 0.0],
        }
    }

    /// Cartesian axis the normal is parallel to (0 for x, 1 for y).
    pub fn axis(self) -> usize {
        match self {
            BoundaryNormal::MinusX | BoundaryNormal::PlusX => 0,
            BoundaryNormal::MinusY | BoundaryNormal::PlusY => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub cell: usize,
    pub normal: BoundaryNormal,
    pub length: f64,
}

/// Conforming triangulation with counterclockwise triangles.
#[derive(Debug, Clone)]
pub struct Mesh2D {
    pub bounds: Rect,
    pub nx: usize,
    pub ny: usize,
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub areas: Vec<f64>,
    pub boundary_edges: Vec<BoundaryEdge>,
}

impl Mesh2D {
    /// `nx × ny` quads, each cut along the diagonal from its lower-left to its
    /// upper-right corner.
    ///
    /// Vertices are numbered row by row (`j * (nx + 1) + i`); quad `(i, j)`
    /// yields triangles `2 * (j * nx + i)` (below the diagonal) and the next
    /// one (above it).
    pub fn rectangle(nx: usize, ny: usize, bounds: Rect) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::DegenerateMesh(format!("{nx} x {ny} cells")));
        }
        if !(bounds.x1 > bounds.x0 && bounds.y1 > bounds.y0) || !bounds.area().is_finite() {
            return Err(Error::DegenerateMesh(format!("bounds {bounds:?}")));
        }
        let hx = (bounds.x1 - bounds.x0) / nx as f64;
        let hy = (bounds.y1 - bounds.y0) / ny as f64;
        let coord = |k: usize, n: usize, a: f64, b: f64, h: f64| {
            if k == n {
                b
            } else {
                a + k as f64 * h
            }
        };
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([
                    coord(i, nx, bounds.x0, bounds.x1, hx),
                    coord(j, ny, bounds.y0, bounds.y1, hy),
                ]);
            }
        }
        let v = |i: usize, j: usize| j * (nx + 1) + i;
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                triangles.push([v(i, j), v(i + 1, j), v(i + 1, j + 1)]);
                triangles.push([v(i, j), v(i + 1, j + 1), v(i, j + 1)]);
            }
        }
        let areas = triangles
            .iter()
            .map(|t| signed_area(&vertices, *t))
            .collect::<Vec<_>>();
        if let Some(c) = areas.iter().position(|&a| a <= 0.0) {
            return Err(Error::DegenerateMesh(format!("triangle {c} has area {}", areas[c])));
        }

        let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
        let cell = |i: usize, j: usize, upper: bool| 2 * (j * nx + i) + upper as usize;
        let dist = |a: usize, b: usize| {
            let (p, q) = (vertices[a], vertices[b]);
            ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
        };
        let mut push = |nodes: [usize; 2], cell: usize, normal| {
            boundary_edges.push(BoundaryEdge {
                nodes,
                cell,
                normal,
                length: dist(nodes[0], nodes[1]),
            })
        };
        for i in 0..nx {
            push([v(i, 0), v(i + 1, 0)], cell(i, 0, false), BoundaryNormal::MinusY);
        }
        for j in 0..ny {
            push([v(nx, j), v(nx, j + 1)], cell(nx - 1, j, false), BoundaryNormal::PlusX);
        }
        for i in 0..nx {
            push([v(i + 1, ny), v(i, ny)], cell(i, ny - 1, true), BoundaryNormal::PlusY);
        }
        for j in 0..ny {
            push([v(0, j + 1), v(0, j)], cell(0, j, true), BoundaryNormal::MinusX);
        }

        Ok(Self {
            bounds,
            nx,
            ny,
            vertices,
            triangles,
            areas,
            boundary_edges,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.triangles.len()
    }

    pub fn cell_vertices(&self, cell: usize) -> [[f64; 2]; 3] {
        let t = self.triangles[cell];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn centroid(&self, cell: usize) -> [f64; 2] {
        let [a, b, c] = self.cell_vertices(cell);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Gradients of the three barycentric (P1 hat) functions on `cell`.
    pub fn gradients(&self, cell: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.cell_vertices(cell);
        let twice = 2.0 * self.areas[cell];
        [
            [(b[1] - c[1]) / twice, (c[0] - b[0]) / twice],
            [(c[1] - a[1]) / twice, (a[0] - c[0]) / twice],
            [(a[1] - b[1]) / twice, (b[0] - a[0]) / twice],
        ]
    }

    /// Point in `cell` with the given barycentric coordinates.
    pub fn map(&self, cell: usize, bary: [f64; 3]) -> [f64; 2] {
        let [a, b, c] = self.cell_vertices(cell);
        [
            bary[0] * a[0] + bary[1] * b[0] + bary[2] * c[0],
            bary[0] * a[1] + bary[1] * b[1] + bary[2] * c[1],
        ]
    }

    /// Plain-text export: a `vertices` section then a `triangles` section.
    pub fn write_text(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "vertices {}", self.n_nodes())?;
        for p in &self.vertices {
            writeln!(out, "{:.17e} {:.17e}", p[0], p[1])?;
        }
        writeln!(out, "triangles {}", self.n_cells())?;
        for t in &self.triangles {
            writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

fn signed_area(vertices: &[[f64; 2]], t: [usize; 3]) -> f64 {
    let (a, b, c) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_area() {
        let m = Mesh2D::rectangle(8, 8, Rect::default()).unwrap();
        assert_eq!(m.n_nodes(), 81);
        assert_eq!(m.n_cells(), 128);
        assert!((m.areas.iter().sum::<f64>() - 4.0).abs() < 1e-12);
        let one = Mesh2D::rectangle(1, 1, Rect::default()).unwrap();
        assert_eq!(one.n_nodes(), 4);
        assert_eq!(one.n_cells(), 2);
    }

    #[test]
    fn boundary_edges_cover_perimeter_once() {
        let m = Mesh2D::rectangle(3, 5, Rect::new(0.0, 3.0, -1.0, 4.0)).unwrap();
        let total: f64 = m.boundary_edges.iter().map(|e| e.length).sum();
        assert!((total - 16.0).abs() < 1e-12);
        for e in &m.boundary_edges {
            let t = m.triangles[e.cell];
            assert!(e.nodes.iter().all(|n| t.contains(n)));
            // the owning cell lies on the inner side of the edge
            let c = m.centroid(e.cell);
            let p = m.vertices[e.nodes[0]];
            let n = e.normal.vector();
            assert!((c[0] - p[0]) * n[0] + (c[1] - p[1]) * n[1] < 0.0);
        }
        let mut seen = std::collections::HashSet::new();
        for e in &m.boundary_edges {
            let mut k = e.nodes;
            k.sort();
            assert!(seen.insert(k));
        }
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(Mesh2D::rectangle(0, 3, Rect::default()).is_err());
        assert!(Mesh2D::rectangle(2, 2, Rect::new(1.0, 1.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn text_export_lists_sections() {
        let m = Mesh2D::rectangle(1, 1, Rect::default()).unwrap();
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("vertices 4\n"));
        assert!(s.contains("triangles 2\n0 1 3\n0 3 2\n"));
    }
}
