//! Structured quadrilateral meshes of the unit square, periodic in x,
//! with walls at y = 0 and y = 1.
//!
//! Element `(i, j)` covers `[i h, (i+1) h] x [j h, (j+1) h]` and has index
//! `j n + i`. Facets are stored in two lexicographic blocks: first the `n²`
//! vertical facets `V(i, j)` at `x = i h` (the one at `i = 0` is the
//! periodic seam), then the `n (n + 1)` horizontal facets `H(i, j)` at
//! `y = j h`. The owner of an interior or periodic facet is the element on
//! its left (vertical) or below it (horizontal), and the stored normal points
//! from owner to neighbor. Wall facets carry the outward normal.

use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wall {
    Bottom,
    Top,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FacetKind {
    Interior,
    Periodic,
    Wall(Wall),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Vertical,
    Horizontal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    pub owner: usize,
    pub neighbor: Option<usize>,
    pub kind: FacetKind,
    pub orientation: Orientation,
    pub normal: [f64; 2],
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    pub i: usize,
    pub j: usize,
    /// Lower-left and upper-right corners.
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    /// Facet indices: left, right, bottom, top.
    pub facets: [usize; 4],
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructuredMesh {
    pub n: usize,
    pub h: f64,
    pub elements: Vec<Element>,
    pub facets: Vec<Facet>,
    /// Vertical facets on the seam x = 0 identified with x = 1, as
    /// `(facet, left element, right element)`.
    pub periodic_pairs: Vec<(usize, usize, usize)>,
}

impl StructuredMesh {
    pub fn new(n: usize) -> Result<Self, Error> {
        build_quad_mesh(n)
    }

    pub fn num_elements(&self) -> usize {
        self.n * self.n
    }

    pub fn element_index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn vertical_facet(&self, i: usize, j: usize) -> usize {
        j * self.n + (i % self.n)
    }

    pub fn horizontal_facet(&self, i: usize, j: usize) -> usize {
        self.n * self.n + j * self.n + i
    }

    /// Element containing `(x, y)`; points on the right/top boundary go to the last cell.
    pub fn locate(&self, x: f64, y: f64) -> (usize, f64, f64) {
        let n = self.n as f64;
        let xs = x.rem_euclid(1.0);
        let i = ((xs * n).floor() as usize).min(self.n - 1);
        let j = ((y * n).floor().max(0.0) as usize).min(self.n - 1);
        let xi = 2.0 * (xs * n - i as f64) - 1.0;
        let eta = 2.0 * (y * n - j as f64) - 1.0;
        (self.element_index(i, j), xi, eta)
    }
}

/// Builds the `n x n` periodic channel mesh.
pub fn build_quad_mesh(n: usize) -> Result<StructuredMesh, Error> {
    if n == 0 {
        return Err(Error::Invalid("mesh size n must be at least 1".into()));
    }
    let h = 1.0 / n as f64;
    let mut facets = Vec::with_capacity(2 * n * n + n);
    let mut periodic_pairs = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let left = j * n + (i + n - 1) % n;
            let right = j * n + i;
            let kind = if i == 0 { FacetKind::Periodic } else { FacetKind::Interior };
            if i == 0 {
                periodic_pairs.push((facets.len(), left, right));
            }
            facets.push(Facet {
                owner: left,
                neighbor: Some(right),
                kind,
                orientation: Orientation::Vertical,
                normal: [1.0, 0.0],
                length: h,
            });
        }
    }
    for j in 0..=n {
        for i in 0..n {
            let f = if j == 0 {
                Facet {
                    owner: i,
                    neighbor: None,
                    kind: FacetKind::Wall(Wall::Bottom),
                    orientation: Orientation::Horizontal,
                    normal: [0.0, -1.0],
                    length: h,
                }
            } else if j == n {
                Facet {
                    owner: (n - 1) * n + i,
                    neighbor: None,
                    kind: FacetKind::Wall(Wall::Top),
                    orientation: Orientation::Horizontal,
                    normal: [0.0, 1.0],
                    length: h,
                }
            } else {
                Facet {
                    owner: (j - 1) * n + i,
                    neighbor: Some(j * n + i),
                    kind: FacetKind::Interior,
                    orientation: Orientation::Horizontal,
                    normal: [0.0, 1.0],
                    length: h,
                }
            };
            facets.push(f);
        }
    }
    let mut elements = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            elements.push(Element {
                i,
                j,
                lo: [i as f64 * h, j as f64 * h],
                hi: [(i + 1) as f64 * h, (j + 1) as f64 * h],
                facets: [
                    j * n + i,
                    j * n + (i + 1) % n,
                    n * n + j * n + i,
                    n * n + (j + 1) * n + i,
                ],
            });
        }
    }
    Ok(StructuredMesh { n, h, elements, facets, periodic_pairs })
}
